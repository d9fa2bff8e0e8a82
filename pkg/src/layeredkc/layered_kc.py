from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from layeredkc.bitcore import (
    EMPTY,
    ONE,
    BitString,
    DyadicWeight,
    Trace,
    is_prefix_free,
    is_proper_prefix,
    render,
    trace_of,
)
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import (
    BudgetExceededError,
    HypothesisFailureError,
    InvalidLengthError,
    InvalidSequenceError,
)
from layeredkc.plain_kc import PlainSolver, PlainSolverState, clear_extension_exists, plain_init


@dataclass(frozen=True)
class LayeredRequest:
    """
    Request for a code of `length` extending some code of request `pointer`.
    The empty request at index 0 has pointer None and length 0.
    """
    pointer: Optional[int]
    length: int
    payload: BitString = EMPTY


EMPTY_REQUEST = LayeredRequest(None, 0, EMPTY)

Snapshot = Tuple[Tuple[BitString, ...], ...]


def _check_request(requests: Sequence[LayeredRequest], index: int, request: LayeredRequest,
                   limits: Limits) -> None:
    if request.pointer is None:
        raise InvalidSequenceError(index, "only request 0 may have pointer *")
    if not 0 <= request.pointer < index:
        raise InvalidSequenceError(index, f"pointer {request.pointer} does not refer to an earlier request")
    parent_length = requests[request.pointer].length
    if request.length <= parent_length:
        raise InvalidSequenceError(
            index, f"length {request.length} not strictly greater than length {parent_length} of request {request.pointer}")
    if request.length > limits.max_request_length:
        raise InvalidLengthError(f"request {index}: length {request.length} exceeds the limit {limits.max_request_length}")


def validate_sequence(requests: Sequence[LayeredRequest], limits: Limits = DEFAULT_LIMITS) -> None:
    """
    Raise InvalidSequenceError at the first request breaking the pointer or length rules.
    """
    if not requests:
        raise InvalidSequenceError(0, "a layered sequence starts with the empty request")
    first = requests[0]
    if first.pointer is not None or first.length != 0:
        raise InvalidSequenceError(0, "request 0 must be the empty request (*, 0)")
    for index in range(1, len(requests)):
        _check_request(requests, index, requests[index], limits)


def sequence_weight(requests: Sequence[LayeredRequest]) -> DyadicWeight:
    return DyadicWeight.of_lengths(r.length for r in requests[1:])


def request_depths(requests: Sequence[LayeredRequest]) -> List[int]:
    depths = [0]
    for request in requests[1:]:
        depths.append(depths[request.pointer] + 1)
    return depths


@dataclass(frozen=True)
class CharSeq:
    indices: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.indices) - 1


@dataclass(frozen=True)
class StageEvent:
    """
    What one stage of the layered greedy solution did.

    `base_depth` is the depth of the base (j0) and `added` lists the
    (request index, code) pairs enumerated at this stage, shallowest first.
    """
    stage: int
    request: int
    base: BitString
    base_request: int
    base_depth: int
    added: Tuple[Tuple[int, BitString], ...]


class LayeredState:
    """
    Greedy solution of a layered KC-sequence, built one request per stage.
    """

    def __init__(self, limits: Limits = DEFAULT_LIMITS):
        self.limits = limits
        self.requests: List[LayeredRequest] = [EMPTY_REQUEST]
        self.sets: List[List[BitString]] = [[EMPTY]]
        self.depths: List[int] = [0]
        self.subsolvers: Dict[BitString, PlainSolver] = {}
        self.owner: Dict[BitString, int] = {EMPTY: 0}
        self.stamp: Dict[BitString, int] = {EMPTY: 0}
        self.parent: Dict[BitString, Optional[BitString]] = {EMPTY: None}
        self.child_count: Dict[BitString, int] = defaultdict(int)
        self.events: List[StageEvent] = []
        self.weight = DyadicWeight.zero()
        self._clock = 1

    def __len__(self) -> int:
        return len(self.requests)

    def solver_state(self, code: BitString) -> PlainSolverState:
        solver = self.subsolvers.get(code)
        return solver.state if solver is not None else plain_init(code)

    def code_trace(self, code: BitString) -> Trace:
        state = self.solver_state(code)
        return trace_of(len(code), state.weight)

    def _solver(self, code: BitString) -> PlainSolver:
        solver = self.subsolvers.get(code)
        if solver is None:
            solver = PlainSolver(code, self.limits)
            self.subsolvers[code] = solver
        return solver

    def _record(self, index: int, code: BitString, parent: BitString) -> None:
        self.owner[code] = index
        self.stamp[code] = self._clock
        self._clock += 1
        self.parent[code] = parent
        self.child_count[parent] += 1

    def codes(self) -> List[BitString]:
        """
        Every enumerated code except λ, oldest first.
        """
        return sorted((c for c in self.stamp if len(c)), key=self.stamp.__getitem__)

    def is_leaf(self, code: BitString) -> bool:
        return self.child_count.get(code, 0) == 0

    def leaves(self) -> List[BitString]:
        return [c for c in self.codes() if self.is_leaf(c)]

    def parent_of(self, code: BitString) -> Optional[BitString]:
        return self.parent[code]

    def ancestors(self, code: BitString) -> List[BitString]:
        """
        Codes below `code` in the code tree, root (λ) first.
        """
        chain = []
        node = self.parent[code]
        while node is not None:
            chain.append(node)
            node = self.parent[node]
        return list(reversed(chain))

    def codes_of_depth(self, depth: int) -> List[BitString]:
        return [c for c in self.codes() if self.depths[self.owner[c]] == depth]

    def snapshot(self) -> Snapshot:
        return tuple(tuple(s) for s in self.sets)


def characteristic_sequence(source: Union[LayeredState, Sequence[LayeredRequest]], index: int) -> CharSeq:
    requests = source.requests if isinstance(source, LayeredState) else source
    chain = [index]
    while requests[chain[-1]].pointer is not None:
        chain.append(requests[chain[-1]].pointer)
    return CharSeq(tuple(reversed(chain)))


def layered_step(state: LayeredState, request: LayeredRequest) -> LayeredState:
    """
    Run one stage of the layered greedy solution.

    Walks the characteristic sequence of the new request from its parent
    downwards and takes as base the earliest code, at the deepest level,
    that still has a clear extension of the next length. One new code is
    then enumerated per level above the base.
    """
    k = len(state.requests)
    _check_request(state.requests, k, request, state.limits)
    new_weight = state.weight.add_term(request.length)
    if new_weight > ONE:
        raise BudgetExceededError(f"request {k}: total weight {new_weight} exceeds 1", index=k)

    path = [k]
    node = request.pointer
    next_length = request.length
    base = None
    while True:
        for code in state.sets[node]:
            if clear_extension_exists(state.solver_state(code), next_length):
                base = code
                break
        if base is not None:
            break
        if node == 0:
            raise HypothesisFailureError(f"request {k}: no code on the characteristic sequence has room")
        path.append(node)
        next_length = state.requests[node].length
        node = state.requests[node].pointer

    state.requests.append(request)
    state.sets.append([])
    state.depths.append(state.depths[request.pointer] + 1)
    state.weight = new_weight

    added = []
    current = base
    for index in reversed(path):
        code = state._solver(current).request(state.requests[index].length)
        state.sets[index].append(code)
        state._record(index, code, current)
        added.append((index, code))
        current = code

    state.events.append(StageEvent(
        stage=k,
        request=k,
        base=base,
        base_request=node,
        base_depth=state.depths[node],
        added=tuple(added),
    ))
    return state


def solve_layered(requests: Sequence[LayeredRequest], limits: Limits = DEFAULT_LIMITS) -> LayeredState:
    validate_sequence(requests, limits)
    weight = sequence_weight(requests)
    if weight > ONE:
        raise BudgetExceededError(f"sequence weight {weight} exceeds 1")
    state = LayeredState(limits)
    for request in requests[1:]:
        layered_step(state, request)
    return state


def layered_solve(requests: Sequence[LayeredRequest], limits: Limits = DEFAULT_LIMITS) -> List[Snapshot]:
    """
    Greedy solution of a finite layered sequence.
    Returns the snapshot of all S_i at the end of every stage, starting with stage 0.
    """
    validate_sequence(requests, limits)
    weight = sequence_weight(requests)
    if weight > ONE:
        raise BudgetExceededError(f"sequence weight {weight} exceeds 1")
    state = LayeredState(limits)
    snapshots = [state.snapshot()]
    for request in requests[1:]:
        layered_step(state, request)
        snapshots.append(state.snapshot())
    return snapshots


def check_solution(requests: Sequence[LayeredRequest], sets: Sequence[Iterable[BitString]]) -> bool:
    """
    Check that the sets satisfy the sequence: every code of S_i has length l_i
    and a proper prefix in S_{u_i}, and codes of sibling requests are incomparable.
    """
    if len(requests) != len(sets):
        return False
    materialized = [list(s) for s in sets]
    if materialized[0] != [EMPTY]:
        return False

    for i in range(1, len(requests)):
        request = requests[i]
        if not materialized[i]:
            return False
        parents = materialized[request.pointer]
        for code in materialized[i]:
            if len(code) != request.length:
                return False
            if not any(is_proper_prefix(p, code) for p in parents):
                return False

    siblings: Dict[int, List[Tuple[str, int]]] = defaultdict(list)
    for i in range(1, len(requests)):
        for code in set(materialized[i]):
            siblings[requests[i].pointer].append((code.to01(), i))
    for labelled in siblings.values():
        labelled.sort()
        for (a, i), (b, j) in zip(labelled, labelled[1:]):
            if i != j and b.startswith(a):
                return False
    return True


def check_trace_monotonicity(state: LayeredState) -> bool:
    """
    Within each S_i, every '1' of an earlier code's trace lies strictly to
    the right of every '1' of a later code's trace.
    """
    for members in state.sets:
        leftmost_so_far = None
        for code in members:
            positions = state.code_trace(code).positions
            if not positions:
                continue
            if leftmost_so_far is not None and max(positions) >= leftmost_so_far:
                return False
            low = min(positions)
            leftmost_so_far = low if leftmost_so_far is None else min(leftmost_so_far, low)
    return True


def layer_prefix_free(state: LayeredState) -> bool:
    by_depth: Dict[int, List[BitString]] = defaultdict(list)
    for code in state.codes():
        by_depth[state.depths[state.owner[code]]].append(code)
    for codes in by_depth.values():
        if len(set(codes)) != len(codes) or not is_prefix_free(codes):
            return False
    return True


def codes_up_to_depth(state: LayeredState, depth: int) -> List[BitString]:
    return [c for c in state.codes() if state.depths[state.owner[c]] <= depth]


@dataclass
class DepthReduction:
    requests: List[LayeredRequest]
    secondary: List[int] = field(default_factory=list)
    reindex: Dict[int, int] = field(default_factory=dict)


def reduce_depth(requests: Sequence[LayeredRequest], events: Sequence[StageEvent]) -> DepthReduction:
    """
    Turn a sequence of depth d+1 into one of depth d whose greedy solution
    has the same codes of depth <= d.

    Requests of depth <= d are copied with pointers reindexed by r(i), the
    number of requests enumerated into the output so far. A depth d+1
    request whose stage had its base at depth d is dropped; otherwise it
    becomes the secondary request (r(v_{d-1}), l_{v_d}).
    """
    depths = request_depths(requests)
    top = max(depths)
    if top <= 1:
        return DepthReduction(list(requests), [], {i: i for i in range(len(requests))})

    d = top - 1
    by_request = {event.request: event for event in events}
    out = [EMPTY_REQUEST]
    reindex = {0: 0}
    secondary = []
    for i in range(1, len(requests)):
        request = requests[i]
        if depths[i] <= d:
            reindex[i] = len(out)
            out.append(LayeredRequest(reindex[request.pointer], request.length, request.payload))
            continue
        event = by_request[i]
        if event.base_depth == d:
            continue
        v_d = request.pointer
        v_below = requests[v_d].pointer
        secondary.append(len(out))
        out.append(LayeredRequest(reindex[v_below], requests[v_d].length, requests[v_d].payload))
    return DepthReduction(out, secondary, reindex)


def depth_reduce(requests: Sequence[LayeredRequest], events: Sequence[StageEvent]) -> List[LayeredRequest]:
    return reduce_depth(requests, events).requests


def format_snapshot(snapshot: Snapshot) -> List[str]:
    return [f"S{i}: " + " ".join(render(c) for c in codes) for i, codes in enumerate(snapshot)]
