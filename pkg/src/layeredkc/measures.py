from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from layeredkc.bitcore import (
    BitString,
    DyadicWeight,
    all_strings,
    ceil_log2,
    length_lex_key,
    prefixes,
    render,
)
from layeredkc.errors import ConfigError, RunValidationError

LENGTH_PLUS_LOG = "length-plus-log"


@dataclass(frozen=True)
class MeasureSpec:
    """
    Information content measure: a partial map from strings to positive integers.

    `domain` is None for total measures. `length_function` is set when the
    value only depends on the length, which lets weights be summed per length.
    `certificate` bounds the sum of 2^-I over the domain.
    """
    name: str
    evaluate: Callable[[BitString], Optional[int]] = field(compare=False)
    certificate: DyadicWeight
    domain: Optional[FrozenSet[BitString]] = field(default=None, compare=False)
    length_function: Optional[Callable[[int], int]] = field(default=None, compare=False)
    monotone: bool = False
    params: Tuple[Tuple[str, str], ...] = ()
    shift: int = 0

    def __call__(self, s: BitString) -> Optional[int]:
        if self.domain is not None and s not in self.domain:
            return None
        value = self.evaluate(s)
        return None if value is None else value + self.shift

    def defined(self, s: BitString) -> bool:
        return self(s) is not None

    def shifted(self, c: int) -> "MeasureSpec":
        """
        I + c, with the certificate scaled by 2^-c.
        """
        if c == 0:
            return self
        return replace(self, shift=self.shift + c, certificate=self.certificate.scaled(c))

    def identifier(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v}" for k, v in self.params)


def length_plus_log(n: int) -> int:
    return n + 2 * ceil_log2(n + 2)


def length_plus_log_measure() -> MeasureSpec:
    """
    I(σ) = |σ| + 2⌈log₂(|σ|+2)⌉.

    Lengths n with n+2 in (2^(k-1), 2^k] contribute 2^(-k-1) in total for
    k >= 2 and λ contributes 1/4, so the full sum is 1/2.
    """
    return MeasureSpec(
        name=LENGTH_PLUS_LOG,
        evaluate=lambda s: length_plus_log(len(s)),
        certificate=DyadicWeight.power(1),
        length_function=length_plus_log,
        monotone=True,
    )


def table_measure(table: Mapping[BitString, int], name: str = "table",
                  params: Tuple[Tuple[str, str], ...] = ()) -> MeasureSpec:
    frozen = dict(table)
    for s, value in frozen.items():
        if value < 1:
            raise ConfigError(f"measure value for {render(s)} must be positive, got {value}")
    certificate = DyadicWeight.of_lengths(frozen.values())
    monotone = all(
        frozen[p] <= value
        for s, value in frozen.items()
        for p in prefixes(s)
        if p in frozen
    )
    return MeasureSpec(
        name=name,
        evaluate=frozen.get,
        certificate=certificate,
        domain=frozenset(frozen),
        monotone=monotone,
        params=params,
    )


class ScriptedApprox:
    """
    Monotone approximation K_s over a finite universe: initial values at
    stage 0, then exactly one strict decrease per stage.
    """

    def __init__(self, initial: Mapping[BitString, int], updates: Sequence[Tuple[int, BitString, int]] = ()):
        self.initial = dict(initial)
        self.updates = tuple(updates)
        self.strings = tuple(sorted(self.initial, key=length_lex_key))
        self._history: Dict[BitString, List[Tuple[int, int]]] = {s: [(0, v)] for s, v in self.initial.items()}

        expected = 1
        for stage, s, value in self.updates:
            if stage != expected:
                raise RunValidationError(f"update for {render(s)} at stage {stage}, expected stage {expected}")
            if s not in self._history:
                raise RunValidationError(f"update at stage {stage} names {render(s)}, which is outside the universe")
            previous = self._history[s][-1][1]
            if value >= previous:
                raise RunValidationError(
                    f"update at stage {stage} does not decrease {render(s)}: {previous} -> {value}")
            self._history[s].append((stage, value))
            expected += 1
        self._snapshots: Dict[int, Dict[BitString, int]] = {}

    @property
    def stages(self) -> int:
        return len(self.updates)

    def __call__(self, s: BitString, stage: int) -> Optional[int]:
        return self.value(s, stage)

    def value(self, s: BitString, stage: int) -> Optional[int]:
        history = self._history.get(s)
        if history is None:
            return None
        current = history[0][1]
        for at, value in history:
            if at > stage:
                break
            current = value
        return current

    def final(self, s: BitString) -> Optional[int]:
        history = self._history.get(s)
        return history[-1][1] if history else None

    def values_at(self, stage: int) -> Dict[BitString, int]:
        snapshot = self._snapshots.get(stage)
        if snapshot is None:
            snapshot = {s: self.value(s, stage) for s in self.strings}
            self._snapshots[stage] = snapshot
        return snapshot

    def update_at(self, stage: int) -> Tuple[int, BitString, int]:
        return self.updates[stage - 1]


def measure_from_bound(g: Callable[[int], int], approx,
                       strings: Optional[Iterable[BitString]] = None,
                       stages: Optional[int] = None,
                       name: str = "bounded") -> MeasureSpec:
    """
    I(σ) = g(|σ|) on the strings whose approximation ever reaches g(|σ|) or
    below, undefined elsewhere.

    `approx` is a ScriptedApprox or any callable (σ, s) -> int that is
    nonincreasing in s; plain callables need `strings` and `stages`.
    """
    if isinstance(approx, ScriptedApprox):
        strings = approx.strings if strings is None else strings
        stages = approx.stages if stages is None else stages
    if strings is None or stages is None:
        raise ConfigError("measure_from_bound needs the strings and stage count of the approximation")

    domain = set()
    approx_weight = DyadicWeight.zero()
    for s in strings:
        values = [approx(s, stage) for stage in range(stages + 1)]
        if any(v is None for v in values):
            continue
        if any(later > earlier for earlier, later in zip(values, values[1:])):
            raise RunValidationError(f"approximation increases on {render(s)}")
        if values[-1] <= g(len(s)):
            domain.add(s)
            approx_weight = approx_weight.add_term(values[-1])

    certificate = DyadicWeight.of_lengths(g(len(s)) for s in domain)
    return MeasureSpec(
        name=name,
        evaluate=lambda s: g(len(s)),
        certificate=certificate,
        domain=frozenset(domain),
        params=(("approx-weight", str(approx_weight)),),
    )


def certify_weight(measure: MeasureSpec, bound: int) -> DyadicWeight:
    """
    Exact sum of 2^-I(σ) over the strings of length <= bound where I is defined.
    """
    total = DyadicWeight.zero()
    if measure.domain is not None:
        for s in measure.domain:
            if len(s) <= bound:
                total = total.add_term(measure(s))
        return total
    if measure.length_function is not None:
        for n in range(bound + 1):
            # 2^n strings of length n, each weighing 2^-(f(n)+shift)
            total = total + DyadicWeight(1, measure.length_function(n) + measure.shift - n)
        return total
    for s in all_strings(bound):
        value = measure(s)
        if value is not None:
            total = total.add_term(value)
    return total


def builtin_measure(name: str) -> MeasureSpec:
    if name == LENGTH_PLUS_LOG:
        return length_plus_log_measure()
    raise ConfigError(f"unknown measure {name!r} (builtin: {LENGTH_PLUS_LOG})")
