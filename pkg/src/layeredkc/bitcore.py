from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from itertools import product
from typing import FrozenSet, Iterable, Iterator, List, Optional, Tuple

from bitarray import frozenbitarray

from layeredkc.errors import BudgetExceededError, FormatError, InvalidLengthError

BitString = frozenbitarray

EMPTY = frozenbitarray()
EMPTY_TOKEN = "-"


def bits(text: str) -> BitString:
    """
    Parse the ASCII form of a bitstring. "-" and "" both denote the empty string.
    """
    text = text.strip()
    if text in ("", EMPTY_TOKEN):
        return EMPTY
    if set(text) - {"0", "1"}:
        raise FormatError(f"not a bitstring: {text!r}")
    return frozenbitarray(text)


def render(s: BitString, empty: str = EMPTY_TOKEN) -> str:
    return s.to01() if len(s) else empty


def concat(*parts: BitString) -> BitString:
    out = frozenbitarray()
    for part in parts:
        out = frozenbitarray(out + part)
    return out


def zeros(n: int) -> BitString:
    return frozenbitarray("0" * n)


def is_prefix(a: BitString, b: BitString) -> bool:
    """
    True when a ⪯ b.
    """
    return len(a) <= len(b) and b[:len(a)] == a


def is_proper_prefix(a: BitString, b: BitString) -> bool:
    return len(a) < len(b) and b[:len(a)] == a


def comparable(a: BitString, b: BitString) -> bool:
    return is_prefix(a, b) or is_prefix(b, a)


def prefixes(s: BitString, proper: bool = True) -> List[BitString]:
    """
    Prefixes of s from λ upward.
    """
    end = len(s) if proper else len(s) + 1
    return [frozenbitarray(s[:i]) for i in range(end)]


def length_lex_key(s: BitString) -> Tuple[int, str]:
    return len(s), s.to01()


def all_strings(max_len: int, min_len: int = 0) -> Iterator[BitString]:
    """
    Every string with min_len <= length <= max_len in length-lexicographic order.
    """
    for n in range(min_len, max_len + 1):
        for digits in product("01", repeat=n):
            yield frozenbitarray("".join(digits)) if n else EMPTY


def is_prefix_free(strings: Iterable[BitString]) -> bool:
    ordered = sorted(strings, key=lambda s: s.to01())
    for a, b in zip(ordered, ordered[1:]):
        if is_prefix(a, b):
            return False
    return True


def leftmost_extension(sigma: BitString, length: int) -> BitString:
    if length < len(sigma):
        raise InvalidLengthError(f"cannot extend a string of length {len(sigma)} to length {length}")
    return concat(sigma, zeros(length - len(sigma)))


def ceil_log2(n: int) -> int:
    """
    ⌈log₂ n⌉ for n >= 1.
    """
    if n < 1:
        raise ValueError(f"ceil_log2 needs a positive argument, got {n}")
    return (n - 1).bit_length()


@total_ordering
@dataclass(frozen=True)
class DyadicWeight:
    """
    Exact value numerator * 2^-scale, kept with an odd numerator (or 0/0 for zero).
    """
    numerator: int = 0
    scale: int = 0

    def __post_init__(self):
        if self.numerator < 0:
            raise ValueError("weights are non-negative")
        num, scale = self.numerator, self.scale
        if num == 0:
            scale = 0
        else:
            shift = (num & -num).bit_length() - 1
            num >>= shift
            scale -= shift
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def zero(cls) -> "DyadicWeight":
        return cls(0, 0)

    @classmethod
    def power(cls, length: int) -> "DyadicWeight":
        """
        2^-length.
        """
        return cls(1, length)

    @classmethod
    def of_lengths(cls, lengths: Iterable[int]) -> "DyadicWeight":
        total = cls.zero()
        for length in lengths:
            total = total.add_term(length)
        return total

    def _aligned(self, other: "DyadicWeight") -> Tuple[int, int, int]:
        scale = max(self.scale, other.scale)
        return (self.numerator << (scale - self.scale),
                other.numerator << (scale - other.scale),
                scale)

    def add_term(self, length: int) -> "DyadicWeight":
        return self + DyadicWeight.power(length)

    def __add__(self, other: "DyadicWeight") -> "DyadicWeight":
        a, b, scale = self._aligned(other)
        return DyadicWeight(a + b, scale)

    def __sub__(self, other: "DyadicWeight") -> "DyadicWeight":
        a, b, scale = self._aligned(other)
        if a < b:
            raise ValueError("weight subtraction would go negative")
        return DyadicWeight(a - b, scale)

    def __lt__(self, other: "DyadicWeight") -> bool:
        a, b, _ = self._aligned(other)
        return a < b

    def scaled(self, shift: int) -> "DyadicWeight":
        """
        self * 2^-shift.
        """
        return DyadicWeight(self.numerator, self.scale + shift)

    def is_zero(self) -> bool:
        return self.numerator == 0

    def as_fraction(self) -> Fraction:
        if self.scale >= 0:
            return Fraction(self.numerator, 1 << self.scale)
        return Fraction(self.numerator << -self.scale)

    def __str__(self) -> str:
        return str(self.as_fraction())


ONE = DyadicWeight.power(0)


def weight_add(w: DyadicWeight, length: int) -> DyadicWeight:
    if length < 0:
        raise InvalidLengthError(f"negative length {length}")
    return w.add_term(length)


@dataclass(frozen=True)
class Trace:
    """
    Positions p (1-based, p carries 2^-p) of the '1' digits of a dyadic value <= 1.
    """
    positions: FrozenSet[int] = frozenset()

    def value(self) -> DyadicWeight:
        total = DyadicWeight.zero()
        for p in self.positions:
            total = total.add_term(p)
        return total

    def largest_at_most(self, length: int) -> Optional[int]:
        candidates = [p for p in self.positions if p <= length]
        return max(candidates) if candidates else None

    def sorted(self) -> List[int]:
        return sorted(self.positions)

    def __bool__(self) -> bool:
        return bool(self.positions)


def trace_of(capacity_exp: int, w: DyadicWeight) -> Trace:
    """
    Binary expansion of 2^-capacity_exp - w.
    """
    capacity = DyadicWeight.power(capacity_exp)
    if w > capacity:
        raise BudgetExceededError(f"weight {w} exceeds capacity 2^-{capacity_exp}")
    rest = capacity - w
    if rest.is_zero():
        return Trace()
    num, scale = rest.numerator, rest.scale
    positions = frozenset(scale - i for i in range(num.bit_length()) if (num >> i) & 1)
    return Trace(positions)
