import hashlib
import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from layeredkc.bitcore import ONE, BitString, DyadicWeight, is_prefix, render
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import AvoidanceError, CombinedBudgetError, InvalidSequenceError
from layeredkc.layered_kc import EMPTY_REQUEST, LayeredRequest, LayeredState, layered_step

EXPANSIONARY = "expansionary"
ADAPTIVE = "adaptive"
IDLE = "idle"


def find_comparable_pair(members: Iterable[BitString]) -> Optional[Tuple[BitString, BitString]]:
    ordered = sorted(members, key=lambda s: s.to01())
    for a, b in zip(ordered, ordered[1:]):
        if is_prefix(a, b):
            return a, b
    return None


@dataclass(frozen=True)
class AvoidSet:
    """
    Finite prefix-free set Q, kept in enumeration order.
    """
    members: Tuple[BitString, ...] = ()

    def __post_init__(self):
        pair = find_comparable_pair(self.members)
        if pair is not None:
            raise AvoidanceError(f"avoid set is not prefix-free: {render(pair[0])} and {render(pair[1])}")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[BitString]:
        return iter(self.members)

    @cached_property
    def weight(self) -> DyadicWeight:
        return DyadicWeight.of_lengths(len(m) for m in self.members)

    @cached_property
    def _lookup(self) -> Set[str]:
        return {m.to01() for m in self.members}

    @cached_property
    def _longest(self) -> int:
        return max((len(m) for m in self.members), default=-1)

    def prefix(self, count: int) -> "AvoidSet":
        """
        Q_s: the first `count` members.
        """
        return AvoidSet(self.members[:count])

    def covers(self, code: BitString) -> bool:
        """
        True when some member is a prefix of code.
        """
        if not self.members:
            return False
        text = code.to01()
        return any(text[:i] in self._lookup for i in range(min(len(text), self._longest) + 1))

    def digest(self) -> str:
        payload = "\n".join(render(m) for m in self.members).encode("ascii")
        return hashlib.sha256(payload).hexdigest()


def check_avoids(codes: Iterable[BitString], q: AvoidSet) -> bool:
    return not any(q.covers(code) for code in codes)


@dataclass(frozen=True)
class FilterState:
    """
    D, the ejected leaves in ejection order, and the kind of every stage so far.
    """
    ejected: Tuple[BitString, ...] = ()
    kinds: Tuple[str, ...] = ()

    @property
    def last_kind(self) -> Optional[str]:
        return self.kinds[-1] if self.kinds else None


def filtered_step(leaves: List[BitString], q: AvoidSet, f: FilterState) -> FilterState:
    """
    One stage of filtered enumeration: eject the most recently enumerated
    leaf outside D that has a prefix in q, if there is one.
    `leaves` is ordered oldest first.
    """
    in_d = set(f.ejected)
    for leaf in reversed(leaves):
        if leaf not in in_d and q.covers(leaf):
            return FilterState(f.ejected + (leaf,), f.kinds + (ADAPTIVE,))
    return FilterState(f.ejected, f.kinds + (EXPANSIONARY,))


@dataclass
class IndexMap:
    """
    current: L-index -> its current L'-index; origin: L'-index -> L-index.
    """
    current: Dict[int, int] = field(default_factory=lambda: {0: 0})
    outdated: Set[int] = field(default_factory=set)
    origin: Dict[int, int] = field(default_factory=lambda: {0: 0})

    def assign(self, l_index: int, lprime_index: int) -> None:
        previous = self.current.get(l_index)
        if previous is not None:
            self.outdated.add(previous)
        self.current[l_index] = lprime_index
        self.origin[lprime_index] = l_index

    def lprime_indices(self, l_index: int) -> List[int]:
        return sorted(i for i, j in self.origin.items() if j == l_index)


@dataclass(frozen=True)
class StageRecord:
    stage: int
    kind: str
    l_index: Optional[int] = None
    lprime_index: Optional[int] = None
    ejected: Optional[BitString] = None


class _LeafWatch:
    """
    Keeps the Q-covered leaves of the solver in a heap keyed by arrival,
    so the most recent one outside D is found without rescanning the tree.
    """

    def __init__(self, solver: LayeredState, q: AvoidSet):
        self.solver = solver
        self.q = q
        self.active = AvoidSet()
        self.heap: List[Tuple[int, str, BitString]] = []

    def _push(self, code: BitString) -> None:
        heapq.heappush(self.heap, (-self.solver.stamp[code], code.to01(), code))

    def advance(self, count: int) -> None:
        if count <= len(self.active):
            return
        added = AvoidSet(self.q.members[len(self.active):count])
        self.active = self.q.prefix(count)
        for leaf in self.solver.leaves():
            if added.covers(leaf):
                self._push(leaf)

    def created(self, code: BitString) -> None:
        if self.active.covers(code):
            self._push(code)

    def best(self, ejected: Set[BitString]) -> Optional[BitString]:
        while self.heap:
            code = self.heap[0][2]
            if code in ejected or not self.solver.is_leaf(code):
                heapq.heappop(self.heap)
                continue
            return code
        return None


@dataclass
class AvoidanceRun:
    """
    Result of interleaving L with Q: the sequence L', its greedy solution,
    the index map and the filter history.
    """
    source: List[LayeredRequest]
    requests: List[LayeredRequest]
    solver: LayeredState
    index_map: IndexMap
    filter_state: FilterState
    stages: List[StageRecord]

    @property
    def weight(self) -> DyadicWeight:
        return self.solver.weight

    def live_leaves(self) -> List[BitString]:
        """
        Leaves of the final code tree that belong to never-outdated requests.
        """
        outdated = self.index_map.outdated
        return [c for c in self.solver.leaves() if self.solver.owner[c] not in outdated]

    def codes_of(self, l_index: int) -> List[BitString]:
        """
        Codes of every L'-request carrying L-request l_index, oldest first.
        """
        codes = []
        for i in self.index_map.lprime_indices(l_index):
            codes.extend(self.solver.sets[i])
        return sorted(codes, key=self.solver.stamp.__getitem__)


class AvoidingPipeline:
    """
    Stage loop that feeds L into the layered solver while ejecting leaves
    covered by Q. Stage s consults Q_{s-1}, the first s-1 members of Q.
    """

    def __init__(self, q: AvoidSet, limits: Limits = DEFAULT_LIMITS, incremental: bool = True):
        self.q = q
        self.limits = limits
        self.incremental = incremental

    def _adaptive_bound(self) -> int:
        if self.limits.adaptive_run_limit is not None:
            return self.limits.adaptive_run_limit
        return sum(1 << max(self.limits.max_request_length - len(m), 0) for m in self.q)

    def run(self, source: Iterable[LayeredRequest]) -> AvoidanceRun:
        feed = iter(source)
        first = next(feed, None)
        if first is None or first.pointer is not None or first.length != 0:
            raise InvalidSequenceError(0, "request 0 must be the empty request (*, 0)")

        if self.q.weight > ONE:
            raise CombinedBudgetError(f"avoid set weight {self.q.weight} exceeds 1")

        solver = LayeredState(self.limits)
        index_map = IndexMap()
        consumed: List[LayeredRequest] = [first]
        lprime: List[LayeredRequest] = [EMPTY_REQUEST]
        ejected: List[BitString] = []
        ejected_set: Set[BitString] = set()
        kinds: List[str] = []
        stages: List[StageRecord] = []
        consumed_weight = DyadicWeight.zero()
        watch = _LeafWatch(solver, self.q)
        filter_state = FilterState()
        adaptive_bound = self._adaptive_bound()
        adaptive_run = 0
        exhausted = False
        stage = 0

        def append(request: LayeredRequest) -> int:
            index = len(lprime)
            lprime.append(request)
            layered_step(solver, request)
            for _, code in solver.events[-1].added:
                watch.created(code)
            return index

        while True:
            stage += 1
            q_count = min(stage - 1, len(self.q))
            if self.incremental:
                watch.advance(q_count)
                candidate = watch.best(ejected_set)
            else:
                filter_state = filtered_step(solver.leaves(), self.q.prefix(q_count), filter_state)
                candidate = filter_state.ejected[-1] if filter_state.last_kind == ADAPTIVE else None

            if candidate is not None:
                adaptive_run += 1
                if adaptive_run > adaptive_bound:
                    raise AvoidanceError(f"more than {adaptive_bound} adaptive stages in a row")
                ejected.append(candidate)
                ejected_set.add(candidate)
                kinds.append(ADAPTIVE)
                outdated = solver.owner[candidate]
                l_index = index_map.origin[outdated]
                if index_map.current.get(l_index) != outdated:
                    raise AvoidanceError(f"ejected code {render(candidate)} belongs to a stale request {outdated}")
                old = lprime[outdated]
                index = append(LayeredRequest(old.pointer, old.length, old.payload))
                index_map.assign(l_index, index)
                stages.append(StageRecord(stage, ADAPTIVE, l_index, index, candidate))
                continue

            adaptive_run = 0
            request = None if exhausted else next(feed, None)
            if request is None:
                exhausted = True
                if q_count >= len(self.q):
                    kinds.append(EXPANSIONARY)
                    stages.append(StageRecord(stage, IDLE))
                    break
                kinds.append(EXPANSIONARY)
                stages.append(StageRecord(stage, IDLE))
                continue

            l_index = len(consumed)
            if request.pointer is None or not 0 <= request.pointer < l_index:
                raise InvalidSequenceError(l_index, f"pointer {request.pointer} does not refer to an earlier request")
            consumed.append(request)
            consumed_weight = consumed_weight.add_term(request.length)
            if consumed_weight + self.q.weight > ONE:
                raise CombinedBudgetError(
                    f"wgt(L) + wgt(Q) = {consumed_weight + self.q.weight} exceeds 1 at request {l_index}",
                    index=l_index)
            index = append(LayeredRequest(index_map.current[request.pointer], request.length, request.payload))
            index_map.assign(l_index, index)
            kinds.append(EXPANSIONARY)
            stages.append(StageRecord(stage, EXPANSIONARY, l_index, index))

        if self.incremental:
            filter_state = FilterState(tuple(ejected), tuple(kinds))
        return AvoidanceRun(consumed, lprime, solver, index_map, filter_state, stages)


def interleave(source: Iterable[LayeredRequest], q: AvoidSet,
               limits: Limits = DEFAULT_LIMITS) -> Tuple[List[LayeredRequest], IndexMap]:
    run = AvoidingPipeline(q, limits).run(source)
    return run.requests, run.index_map
