from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Tuple

from bitarray import frozenbitarray

from layeredkc.bitcore import (
    EMPTY,
    BitString,
    DyadicWeight,
    Trace,
    concat,
    is_prefix,
    is_prefix_free,
    leftmost_extension,
    render,
    trace_of,
    zeros,
)
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import BudgetExceededError, InvalidLengthError, SolverFailedError


@dataclass(frozen=True)
class PlainSolverState:
    """
    Greedy Kraft-Chaitin state relative to `base`.

    `fillers` holds (trace position, filler string) pairs; each filler has
    length equal to its position and the positions are exactly the '1's of
    the trace of 2^-|base| - weight.
    """
    base: BitString = EMPTY
    codes: Tuple[BitString, ...] = ()
    fillers: Tuple[Tuple[int, BitString], ...] = ()
    weight: DyadicWeight = field(default_factory=DyadicWeight.zero)

    @property
    def trace(self) -> Trace:
        return Trace(frozenset(p for p, _ in self.fillers))

    def filler_at(self, position: int) -> Optional[BitString]:
        for p, mu in self.fillers:
            if p == position:
                return mu
        return None

    def capacity(self) -> DyadicWeight:
        return DyadicWeight.power(len(self.base))


def plain_init(base: BitString = EMPTY) -> PlainSolverState:
    return PlainSolverState(base=base, fillers=((len(base), base),))


def clear_extension_exists(state: PlainSolverState, length: int) -> bool:
    """
    True iff the base still has a clear extension of the given length,
    i.e. weight + 2^-length <= 2^-|base|.
    """
    if length < len(state.base):
        return False
    return state.weight.add_term(length) <= state.capacity()


def plain_step(state: PlainSolverState, length: int,
               limits: Limits = DEFAULT_LIMITS) -> Tuple[PlainSolverState, BitString]:
    """
    Satisfy one request of the given length with the leftmost extension of
    the filler at the largest trace position <= length.
    Returns the new state and the assigned code.
    """
    if length <= len(state.base):
        raise InvalidLengthError(f"request length {length} must exceed base length {len(state.base)}")
    if length > limits.max_request_length:
        raise InvalidLengthError(f"request length {length} exceeds the limit {limits.max_request_length}")

    new_weight = state.weight.add_term(length)
    if new_weight > state.capacity():
        raise BudgetExceededError(
            f"weight {new_weight} would exceed capacity 2^-{len(state.base)} above {render(state.base)}")

    position = state.trace.largest_at_most(length)
    mu = state.filler_at(position)
    code = leftmost_extension(mu, length)

    fillers = [(p, f) for p, f in state.fillers if p != position]
    # R = {mu 0^(length-p-i) 1 : 0 < i <= length-p}, empty when p == length
    for i in range(1, length - position + 1):
        filler = concat(mu, zeros(length - position - i), frozenbitarray("1"))
        fillers.append((len(filler), filler))
    fillers.sort(key=lambda item: item[0])

    new_state = replace(state, codes=state.codes + (code,), fillers=tuple(fillers), weight=new_weight)
    return new_state, code


class PlainSolver:
    """
    Mutable wrapper around PlainSolverState. A budget or length failure is
    terminal: later requests raise SolverFailedError.
    """

    def __init__(self, base: BitString = EMPTY, limits: Limits = DEFAULT_LIMITS):
        self.state = plain_init(base)
        self.limits = limits
        self.failed = False

    def request(self, length: int) -> BitString:
        if self.failed:
            raise SolverFailedError(f"solver above {render(self.state.base)} already failed")
        try:
            self.state, code = plain_step(self.state, length, self.limits)
        except (BudgetExceededError, InvalidLengthError):
            self.failed = True
            raise
        return code


def plain_solve(base: BitString, lengths: Iterable[int],
                limits: Limits = DEFAULT_LIMITS) -> List[BitString]:
    state = plain_init(base)
    codes = []
    for index, length in enumerate(lengths):
        try:
            state, code = plain_step(state, length, limits)
        except BudgetExceededError as exc:
            raise BudgetExceededError(f"budget exceeded at request {index}: {exc}", index=index) from exc
        codes.append(code)
    return codes


def check_state(state: PlainSolverState) -> List[str]:
    """
    Check the solver invariants. Returns a list of violations, empty when the state is sound.
    """
    problems = []
    base = state.base
    if state.weight > state.capacity():
        problems.append("weight exceeds capacity")
        return problems

    for p, mu in state.fillers:
        if len(mu) != p:
            problems.append(f"filler {render(mu)} tagged with position {p}")
    if state.trace != trace_of(len(base), state.weight):
        problems.append("filler positions differ from the trace of the remaining budget")
    if len({p for p, _ in state.fillers}) != len(state.fillers):
        problems.append("two fillers share a trace position")

    pieces = list(state.codes) + [mu for _, mu in state.fillers]
    if any(not is_prefix(base, s) for s in pieces):
        problems.append("a code or filler does not extend the base")
    if len(set(pieces)) != len(pieces) or not is_prefix_free(pieces):
        problems.append("codes and fillers are not prefix-free")

    covered = DyadicWeight.of_lengths(len(s) for s in pieces)
    if covered != state.capacity():
        problems.append(f"codes and fillers cover {covered}, expected {state.capacity()}")
    return problems
