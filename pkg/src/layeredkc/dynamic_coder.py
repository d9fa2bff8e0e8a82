from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

from bitarray import frozenbitarray

from layeredkc.avoidance import AvoidanceRun, AvoidingPipeline, AvoidSet
from layeredkc.bitcore import ONE, BitString, DyadicWeight, ceil_log2, length_lex_key, render
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import (
    CombinedBudgetError,
    EncodingError,
    RunValidationError,
    TargetBeyondBoundError,
    WeightAccountingError,
)
from layeredkc.layered_kc import EMPTY_REQUEST, LayeredRequest, validate_sequence
from layeredkc.measures import ScriptedApprox, table_measure
from layeredkc.stream_coder import CodePrefix, OracleTape, build_requests, decode_stream, tail_minima


@dataclass(frozen=True)
class TailReport:
    """
    Outcome of checking sum over ρ ⪰ σ of 2^-(K_s(ρ)+⌈log₂|ρ|⌉+c) <= 2^-K_s(σ).
    `tightest` is the largest left/right ratio seen, with its stage and string.
    """
    stages: int
    strings: int
    tightest: Tuple[int, str, str]


class ApproxRun(ScriptedApprox):
    """
    Scripted approximation K_s driving the dynamic coder, with the constant c.
    The universe holds strings of length >= 1 and is closed under nonempty prefixes.
    """

    def __init__(self, initial: Mapping[BitString, int], updates: Sequence[Tuple[int, BitString, int]] = (),
                 c: int = 1, universe_maxlen: Optional[int] = None):
        if c < 1:
            raise RunValidationError(f"c must be at least 1, got {c}")
        for s in initial:
            if len(s) == 0:
                raise RunValidationError("the empty string cannot carry a value")
            if universe_maxlen is not None and len(s) > universe_maxlen:
                raise RunValidationError(f"{render(s)} is longer than universe-maxlen={universe_maxlen}")
            if len(s) > 1 and frozenbitarray(s[:-1]) not in initial:
                raise RunValidationError(f"the universe has {render(s)} but not its prefix {render(s[:-1])}")
        super().__init__(initial, updates)
        self.c = c
        self.universe_maxlen = universe_maxlen if universe_maxlen is not None else max(
            (len(s) for s in initial), default=0)
        self.report = verify_tail_inequality(self)

    def adjusted(self, s: BitString, stage: int) -> int:
        """
        K_s(σ) + ⌈log₂|σ|⌉.
        """
        return self.value(s, stage) + ceil_log2(len(s))

    def request_length(self, s: BitString, stage: int) -> int:
        return self.adjusted(s, stage) + self.c

    def final_weight(self) -> DyadicWeight:
        return DyadicWeight.of_lengths(self.final(s) for s in self.strings)


def verify_tail_inequality(run: ApproxRun) -> TailReport:
    """
    Check the weighted tail inequality for every string at every stage by
    exact summation. Raises RunValidationError at the first violation.
    """
    values = dict(run.values_at(0))
    term = {s: DyadicWeight.power(values[s] + ceil_log2(len(s)) + run.c) for s in run.strings}
    tail = dict(term)
    for s in sorted(run.strings, key=length_lex_key, reverse=True):
        if len(s) > 1:
            parent = frozenbitarray(s[:-1])
            tail[parent] = tail[parent] + tail[s]

    tightest = (0, "", "0")
    best_ratio = None

    def check(stage: int, s: BitString) -> None:
        nonlocal tightest, best_ratio
        bound = DyadicWeight.power(values[s])
        if tail[s] > bound:
            raise RunValidationError(
                f"tail inequality fails at stage {stage} for {render(s)}: {tail[s]} > {bound}")
        ratio = tail[s].scaled(-values[s])
        if best_ratio is None or ratio > best_ratio:
            best_ratio = ratio
            tightest = (stage, render(s), str(ratio))

    for s in run.strings:
        check(0, s)
    for stage, s, value in run.updates:
        old_term = term[s]
        values[s] = value
        term[s] = DyadicWeight.power(value + ceil_log2(len(s)) + run.c)
        delta = term[s] - old_term
        for i in range(len(s), 0, -1):
            p = frozenbitarray(s[:i])
            tail[p] = tail[p] + delta
            check(stage, p)
    return TailReport(run.stages, len(run.strings), tightest)


def target_pretarget(run: ApproxRun, stage: int) -> Tuple[BitString, Optional[BitString]]:
    """
    The string updated at `stage` and its longest proper nonempty prefix τ
    with K(τ)+⌈log₂|τ|⌉ < K(σ)+⌈log₂|σ|⌉, values taken at `stage`.
    """
    if not 1 <= stage <= run.stages:
        raise TargetBeyondBoundError(f"stage {stage} is outside the run (1..{run.stages})")
    _, target, _ = run.update_at(stage)
    return target, pretarget_of(run, target, stage)


def pretarget_of(run: ApproxRun, s: BitString, stage: int) -> Optional[BitString]:
    level = run.adjusted(s, stage)
    for i in range(len(s) - 1, 0, -1):
        tau = frozenbitarray(s[:i])
        if run.adjusted(tau, stage) < level:
            return tau
    return None


def crossing_extensions(run: ApproxRun, stage: int) -> List[BitString]:
    """
    Proper extensions of the target whose pretarget becomes the target at
    `stage`. Their requests still point above the target and must be
    re-issued below its new request.
    """
    target, _ = target_pretarget(run, stage)
    found = []
    for rho in sorted(run.strings, key=length_lex_key):
        if len(rho) <= len(target) or rho[:len(target)] != target:
            continue
        if pretarget_of(run, rho, stage) == target and pretarget_of(run, rho, stage - 1) != target:
            found.append(rho)
    return found


def _is_valid(requests: Sequence[LayeredRequest], index: int, run: ApproxRun, stage: int,
              memo: Dict[int, bool]) -> bool:
    chain = []
    node = index
    while node != 0 and node not in memo:
        chain.append(node)
        node = requests[node].pointer
    valid = memo.get(node, True)
    for i in reversed(chain):
        request = requests[i]
        valid = valid and request.length == run.request_length(request.payload, stage)
        memo[i] = valid
    return memo[index] if index != 0 else True


def _children(requests: Sequence[LayeredRequest]) -> List[List[int]]:
    children: List[List[int]] = [[] for _ in requests]
    for i in range(1, len(requests)):
        children[requests[i].pointer].append(i)
    return children


def _current(requests: Sequence[LayeredRequest], run: ApproxRun, stage: int) -> Set[int]:
    """
    Indices of the latest request valid at `stage` for each string.
    """
    memo: Dict[int, bool] = {}
    latest: Dict[BitString, int] = {}
    for i in range(1, len(requests)):
        if _is_valid(requests, i, run, stage, memo):
            latest[requests[i].payload] = i
    return set(latest.values())


def subtree(requests: Sequence[LayeredRequest], t: int, run: ApproxRun, stage: int) -> List[LayeredRequest]:
    """
    Descendants of request t that are valid at `stage`, reindexed from 0.
    A request superseded by a later valid request for the same string is
    left out together with its descendants, so every string occurs at most
    once. The root keeps its payload and length; its pointer becomes None.
    """
    current = _current(requests, run, stage)
    children = _children(requests)
    kept = [t]
    frontier = [t]
    while frontier:
        node = frontier.pop()
        for child in children[node]:
            if child in current:
                kept.append(child)
                frontier.append(child)
    kept.sort()
    position = {n: i for i, n in enumerate(kept)}
    root = requests[t]
    out = [LayeredRequest(None, root.length, root.payload)]
    for n in kept[1:]:
        r = requests[n]
        out.append(LayeredRequest(position[r.pointer], r.length, r.payload))
    return out


def clone_extend(requests: Sequence[LayeredRequest], t: int, run: ApproxRun, stage: int) -> List[LayeredRequest]:
    """
    Append to L_{k+1} the valid subtree of r_t in L_k, hung below request k.
    """
    k = len(requests) - 1
    if not 0 < t < k:
        raise ValueError(f"clone_extend needs 0 < t < k, got t={t}, k={k}")
    tree = subtree(requests[:k], t, run, stage)
    out = list(requests)
    for r in tree[1:]:
        out.append(LayeredRequest(r.pointer + k, r.length, r.payload))
    return out


@dataclass(frozen=True)
class DynamicEvent:
    stage: int
    target: BitString
    pretarget: Optional[BitString]
    request: int
    clones: int
    weight_increase: DyadicWeight
    reissued: Tuple[BitString, ...] = ()


@dataclass
class DynamicState:
    """
    The universal sequence L_s after `stage` stages.
    """
    run: ApproxRun
    requests: List[LayeredRequest]
    stage: int = 0
    events: List[DynamicEvent] = field(default_factory=list)
    by_payload: Dict[BitString, List[int]] = field(default_factory=dict)

    def valid_request(self, s: BitString, stage: Optional[int] = None) -> Optional[int]:
        """
        Index of the request for s that is valid at `stage` (default: the current stage).
        """
        stage = self.stage if stage is None else stage
        memo: Dict[int, bool] = {}
        for index in reversed(self.by_payload.get(s, [])):
            if _is_valid(self.requests, index, self.run, stage, memo):
                return index
        return None

    def _append(self, request: LayeredRequest) -> int:
        self.requests.append(request)
        index = len(self.requests) - 1
        self.by_payload.setdefault(request.payload, []).append(index)
        return index


def seed(run: ApproxRun) -> DynamicState:
    """
    L_0: every string of the universe with length K_0(σ)+⌈log₂|σ|⌉+c,
    pointing at the request of its longest prefix with a smaller value.
    """
    lengths = {s: run.request_length(s, 0) for s in run.strings}
    requests = build_requests(table_measure(lengths, name="seed"), run.strings)
    state = DynamicState(run, [EMPTY_REQUEST])
    for request in requests[1:]:
        state._append(request)
    return state


def universal_step(state: DynamicState, run: ApproxRun, stage: int) -> DynamicState:
    """
    Stage s+1: issue a request for the target at its new value, pointing at
    the valid request of its pretarget, then clone the valid descendants of
    the target's previous request below it. Extensions whose pretarget
    becomes the target are re-issued below the new request with their
    valid descendants.

    Every re-issued string is a proper extension of the target and occurs
    once, so the tail inequality at stage s bounds the added weight.
    """
    if stage != state.stage + 1:
        raise RunValidationError(f"stage {stage} applied after stage {state.stage}")
    previous = state.valid_request(run.update_at(stage)[1], state.stage)
    target, pretarget = target_pretarget(run, stage)

    pointer = 0
    if pretarget is not None:
        pointer = state.valid_request(pretarget, stage)
        if pointer is None:
            raise WeightAccountingError(f"pretarget {render(pretarget)} has no valid request at stage {stage}")

    k = state._append(LayeredRequest(pointer, run.request_length(target, stage), target))
    before = state.requests[:k]
    increase = DyadicWeight.power(state.requests[k].length)
    clones = 0
    if previous is not None:
        extended = clone_extend(state.requests, previous, run, state.stage)
        for request in extended[k + 1:]:
            state._append(request)
            increase = increase.add_term(request.length)
            clones += 1

    reissued = crossing_extensions(run, stage)
    for rho in reissued:
        t = state.valid_request(rho, state.stage)
        if t is None or t >= k:
            raise WeightAccountingError(f"{render(rho)} has no valid request at stage {state.stage}")
        tree = subtree(before, t, run, state.stage)
        base = len(state.requests)
        for i, request in enumerate(tree):
            state._append(LayeredRequest(k if i == 0 else request.pointer + base, request.length, request.payload))
            increase = increase.add_term(request.length)

    limit = DyadicWeight.power(run.value(target, stage))
    if increase > limit:
        raise WeightAccountingError(f"stage {stage} added weight {increase} > {limit}")

    state.events.append(DynamicEvent(stage, target, pretarget, k, clones, increase, tuple(reissued)))
    state.stage = stage
    return state


def build_universal(run: ApproxRun, limits: Limits = DEFAULT_LIMITS) -> DynamicState:
    state = seed(run)
    for stage in range(1, run.stages + 1):
        universal_step(state, run, stage)
    validate_sequence(state.requests, limits)
    return state


def significant_segments(run: ApproxRun, x: BitString) -> List[int]:
    """
    n_0 < n_1 < ...: the tail-minimum cascade of K(x↾i)+⌈log₂ i⌉ over final
    values, ties going to the largest length.
    """
    values = {}
    for i in range(1, len(x) + 1):
        value = run.final(frozenbitarray(x[:i]))
        if value is None:
            raise TargetBeyondBoundError(f"prefix of length {i} is outside the run's universe")
        values[i] = value + ceil_log2(i)
    return tail_minima(values)


def expected_use(run: ApproxRun, x: BitString) -> Dict[int, int]:
    """
    min over n <= i <= |x| of K(x↾i)+⌈log₂ i⌉, plus c.
    """
    table = {0: 0}
    best = None
    for i in range(len(x), 0, -1):
        final = run.final(frozenbitarray(x[:i]))
        if final is None:
            raise TargetBeyondBoundError(f"prefix of length {i} is outside the run's universe")
        value = final + ceil_log2(i)
        best = value if best is None else min(best, value)
        table[i] = best + run.c
    return table


@dataclass
class DynamicCodebook:
    run: ApproxRun
    q: AvoidSet
    universal: DynamicState
    avoidance: AvoidanceRun
    payloads: Dict[BitString, BitString]

    @property
    def longest_code(self) -> int:
        return max((len(c) for c in self.payloads), default=0)


def build_dynamic_codebook(run: ApproxRun, q: AvoidSet, limits: Limits = DEFAULT_LIMITS) -> DynamicCodebook:
    total = run.final_weight() + q.weight
    if total >= ONE:
        raise CombinedBudgetError(f"final approximation weight plus wgt(Q) is {total}, not below 1")
    universal = build_universal(run, limits)
    avoidance = AvoidingPipeline(q, limits).run(universal.requests)
    solver = avoidance.solver
    payloads = {code: avoidance.requests[solver.owner[code]].payload for code in solver.codes()}
    return DynamicCodebook(run, q, universal, avoidance, payloads)


def dynamic_encode_with(codebook: DynamicCodebook, x: BitString, n: int) -> CodePrefix:
    """
    Cut the code chain of x at the tail minimum for n. Raises EncodingError
    when a code on the chain is longer than the tail minimum it stands for.
    """
    if n > len(x):
        raise TargetBeyondBoundError(f"n={n} is beyond the source length {len(x)}")
    final = codebook.universal.valid_request(x)
    if final is None:
        raise EncodingError(f"{render(x)} has no valid request at the final stage")
    expected = expected_use(codebook.run, x)
    if n == 0:
        return CodePrefix(frozenbitarray(), expected, codebook.run.c, 0)

    candidates = [c for c in codebook.avoidance.codes_of(final) if not codebook.q.covers(c)]
    if not candidates:
        raise EncodingError(f"every code for {render(x)} has a prefix in the avoid set")
    y_full = min(candidates, key=lambda c: c.to01())

    chain = codebook.avoidance.solver.ancestors(y_full)[1:] + [y_full]
    actual = {0: 0}
    for m in range(1, len(x) + 1):
        reached = next(c for c in chain if len(codebook.payloads[c]) >= m)
        actual[m] = len(reached)
    stray = [m for m in actual if actual[m] != expected[m]]
    if stray:
        m = stray[0]
        raise EncodingError(f"the code chain of {render(x)} reads {actual[m]} bits for n={m}, "
                            f"the tail minimum is {expected[m]}")
    y = frozenbitarray(y_full[:actual[n]])
    return CodePrefix(y, actual, codebook.run.c, n)


def dynamic_encode(x: BitString, run: ApproxRun, q: AvoidSet, n: int,
                   limits: Limits = DEFAULT_LIMITS) -> CodePrefix:
    return dynamic_encode_with(build_dynamic_codebook(run, q, limits), x, n)


def dynamic_decode(y: Union[BitString, OracleTape], run: ApproxRun, q: AvoidSet, n: int,
                   limits: Limits = DEFAULT_LIMITS) -> BitString:
    codebook = build_dynamic_codebook(run, q, limits)
    return decode_stream(codebook.payloads, y, n, codebook.longest_code)


__all__ = [
    "ApproxRun",
    "DynamicCodebook",
    "DynamicState",
    "TailReport",
    "build_dynamic_codebook",
    "build_universal",
    "clone_extend",
    "crossing_extensions",
    "dynamic_decode",
    "dynamic_encode",
    "dynamic_encode_with",
    "expected_use",
    "pretarget_of",
    "seed",
    "significant_segments",
    "subtree",
    "target_pretarget",
    "universal_step",
    "verify_tail_inequality",
]
