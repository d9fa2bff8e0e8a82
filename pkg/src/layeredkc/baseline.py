"""
Gács-style block coding baseline.

The source is cut into blocks σ_1 σ_2 ... whose lengths follow a schedule.
Each block is written as a self-delimiting header (the block length, coded
with a prefix-free length codebook from plain_kc) followed by the raw block
bits. Reading x↾n needs every block through k_n, the least k with
|σ_1| + ... + |σ_k| >= n, so the overhead grows with k_n and |σ_{k_n}|.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from bitarray import bitarray, frozenbitarray

from layeredkc.avoidance import AvoidSet
from layeredkc.bitcore import EMPTY, BitString, ceil_log2, render
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import ConfigError, DecodingError, TargetBeyondBoundError, UndefinedMeasureError
from layeredkc.measures import MeasureSpec
from layeredkc.plain_kc import plain_solve
from layeredkc.stream_coder import (
    OracleTape,
    StreamCodebook,
    build_codebook,
    encode_with,
    use_table,
    working_universe,
)

BASELINE_LABEL = "Gács-style block baseline"

SCHEDULES: Dict[str, Callable[[int], int]] = {
    "linear": lambda i: i,
    "quadratic": lambda i: i * i,
    "exponential": lambda i: 1 << (i - 1),
}


def schedule_names() -> List[str]:
    return list(SCHEDULES)


def block_length(schedule: str, i: int) -> int:
    try:
        return SCHEDULES[schedule](i)
    except KeyError:
        raise ConfigError(f"unknown schedule {schedule!r} (known: {', '.join(SCHEDULES)})") from None


@dataclass(frozen=True)
class BlockPlan:
    """
    Block lengths |σ_1| .. |σ_{k_n}| of a schedule, enough to cover n bits.
    """
    schedule: str
    n: int
    block_lengths: Tuple[int, ...]

    @property
    def k_n(self) -> int:
        return len(self.block_lengths)

    @property
    def boundaries(self) -> Tuple[int, ...]:
        """
        Cumulative lengths: boundaries[k] = |σ_1| + ... + |σ_k|, boundaries[0] = 0.
        """
        total = 0
        out = [0]
        for b in self.block_lengths:
            total += b
            out.append(total)
        return tuple(out)

    @property
    def total(self) -> int:
        return self.boundaries[-1]

    @property
    def last_block(self) -> int:
        return self.block_lengths[-1] if self.block_lengths else 0

    @property
    def overshoot(self) -> int:
        return self.total - self.n

    def blocks_for(self, m: int) -> int:
        """
        k_m for m <= n.
        """
        if m > self.n:
            raise TargetBeyondBoundError(f"m={m} is beyond the plan bound {self.n}")
        for k, boundary in enumerate(self.boundaries):
            if boundary >= m:
                return k
        return self.k_n


def plan(n: int, schedule: str = "linear") -> BlockPlan:
    if n < 0:
        raise ConfigError(f"n must be non-negative, got {n}")
    lengths = []
    covered = 0
    while covered < n:
        b = block_length(schedule, len(lengths) + 1)
        lengths.append(b)
        covered += b
    return BlockPlan(schedule, n, tuple(lengths))


def header_length(b: int) -> int:
    """
    Codeword length for a block of length b: 2⌈log₂(b+1)⌉+1.
    Summed over every b >= 1 the weights come to 1/4.
    """
    return 2 * ceil_log2(b + 1) + 1


@lru_cache(maxsize=8)
def header_codebook(max_block: int) -> Dict[int, BitString]:
    """
    Prefix-free header codes for block lengths 1..max_block, allocated
    greedily in increasing order of b.
    """
    codes = plain_solve(EMPTY, [header_length(b) for b in range(1, max_block + 1)])
    return {b: code for b, code in zip(range(1, max_block + 1), codes)}


@dataclass(frozen=True)
class BlockCode:
    y: BitString
    use_table: Dict[int, int] = field(compare=False)
    header_bits: int = 0
    block_lengths: Tuple[int, ...] = ()


def block_encode(x: BitString, I: Optional[MeasureSpec], block_plan: BlockPlan) -> BlockCode:
    """
    Write x as header(|σ_1|) σ_1 header(|σ_2|) σ_2 ... for every block of the
    plan. A block that runs past the end of x is cut short and its header
    records the shorter length.

    use_table[m] is the length of the stream through block k_m.
    """
    if block_plan.n > len(x):
        raise TargetBeyondBoundError(f"plan covers {block_plan.n} bits, source has {len(x)}")
    if I is not None:
        for boundary in block_plan.boundaries[1:]:
            cut = min(boundary, len(x))
            if I(frozenbitarray(x[:cut])) is None:
                raise UndefinedMeasureError(f"measure {I.identifier()} is undefined at block boundary {cut}")

    lengths = []
    start = 0
    for b in block_plan.block_lengths:
        actual = min(b, len(x) - start)
        if actual <= 0:
            break
        lengths.append(actual)
        start += actual
    headers = header_codebook(max(block_plan.block_lengths, default=1))

    y = bitarray()
    header_bits = 0
    ends = [0]
    start = 0
    for b in lengths:
        header = headers[b]
        y.extend(header)
        y.extend(x[start:start + b])
        header_bits += len(header)
        start += b
        ends.append(len(y))

    table = {0: 0}
    k = 0
    covered = 0
    for m in range(1, start + 1):
        while covered < m:
            covered += lengths[k]
            k += 1
        table[m] = ends[k]
    return BlockCode(frozenbitarray(y), table, header_bits, tuple(lengths))


def block_decode(y: Union[BitString, OracleTape], block_plan: BlockPlan, n: int) -> BitString:
    """
    Replay the block stream until at least n source bits are known.
    """
    if n > block_plan.n:
        raise TargetBeyondBoundError(f"n={n} is beyond the plan bound {block_plan.n}")
    tape = y if isinstance(y, OracleTape) else OracleTape(y)
    lookup = {render(code): b for b, code in header_codebook(max(block_plan.block_lengths, default=1)).items()}
    longest = max((len(k) for k in lookup), default=0)

    out = bitarray()
    position = 0
    while len(out) < n:
        read = ""
        b = None
        while b is None:
            if len(read) >= longest:
                raise DecodingError(f"not a code: no block header at bit {position}")
            read += str(tape.read(position))
            position += 1
            b = lookup.get(read)
        for _ in range(b):
            out.append(tape.read(position))
            position += 1
    return frozenbitarray(out[:n])


@dataclass(frozen=True)
class OverheadRow:
    n: int
    k_n: int
    last_block: int
    overshoot: int
    ideal: int
    layered_use: int
    baseline_use: int

    @property
    def layered_overhead(self) -> int:
        return self.layered_use - self.ideal

    @property
    def baseline_overhead(self) -> int:
        return self.baseline_use - self.ideal

    def as_dict(self) -> Dict[str, int]:
        return {
            "n": self.n,
            "k_n": self.k_n,
            "last_block": self.last_block,
            "overshoot": self.overshoot,
            "ideal": self.ideal,
            "layered_use": self.layered_use,
            "baseline_use": self.baseline_use,
            "layered_overhead": self.layered_overhead,
            "baseline_overhead": self.baseline_overhead,
        }


@dataclass(frozen=True)
class OverheadReport:
    schedule: str
    measure: str
    source_length: int
    rows: Tuple[OverheadRow, ...]
    label: str = BASELINE_LABEL

    def ratio(self, small: int, large: int) -> Optional[float]:
        by_n = {row.n: row for row in self.rows}
        if small not in by_n or large not in by_n or by_n[small].baseline_overhead == 0:
            return None
        return by_n[large].baseline_overhead / by_n[small].baseline_overhead


def layered_codebook(x: BitString, I: MeasureSpec, limits: Limits = DEFAULT_LIMITS) -> StreamCodebook:
    """
    Stream coder replay with x's prefixes as the universe and no avoid set.
    """
    universe = working_universe(I, len(x), sources=[x], limits=limits)
    return build_codebook(I, AvoidSet(), universe, limits)


def layered_uses(x: BitString, I: MeasureSpec, ns: Sequence[int], limits: Limits = DEFAULT_LIMITS,
                 codebook: Optional[StreamCodebook] = None) -> Dict[int, int]:
    if codebook is None:
        codebook = layered_codebook(x, I, limits)
    return {n: encode_with(codebook, x, n).use for n in ns}


def overhead_report(x: BitString, I: MeasureSpec, ns: Sequence[int], schedule: str = "linear",
                    limits: Limits = DEFAULT_LIMITS,
                    layered: Optional[Dict[int, int]] = None) -> OverheadReport:
    """
    Compare, at each n, the ideal min over n <= i <= |x| of I(x↾i) with the
    oracle-use of the layered stream coder and of the block baseline.
    """
    if any(n > len(x) for n in ns):
        raise TargetBeyondBoundError(f"largest n={max(ns)} is beyond the source length {len(x)}")
    block_plan = plan(len(x), schedule)
    code = block_encode(x, I, block_plan)
    ideal = use_table(I, x)
    if layered is None:
        layered = layered_uses(x, I, ns, limits)

    rows = []
    for n in ns:
        n_plan = plan(n, schedule)
        rows.append(OverheadRow(
            n=n,
            k_n=n_plan.k_n,
            last_block=n_plan.last_block,
            overshoot=n_plan.overshoot,
            ideal=ideal[n].value,
            layered_use=layered[n],
            baseline_use=code.use_table[n],
        ))
    return OverheadReport(schedule, I.identifier(), len(x), tuple(rows))


def alternating_source(length: int) -> BitString:
    return frozenbitarray([i % 2 for i in range(length)])


def comparison_source(ns: Sequence[int], schedule: str = "linear") -> BitString:
    """
    Alternating bits long enough to fill every block needed for the largest n.
    """
    return alternating_source(plan(max(ns, default=0), schedule).total)
