import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from bitarray import bitarray, frozenbitarray

from layeredkc.avoidance import AvoidanceRun, AvoidingPipeline, AvoidSet
from layeredkc.bitcore import (
    EMPTY,
    ONE,
    BitString,
    DyadicWeight,
    all_strings,
    length_lex_key,
    prefixes,
    render,
)
from layeredkc.config import DEFAULT_LIMITS, Limits
from layeredkc.errors import (
    CombinedBudgetError,
    ConfigError,
    DecodingError,
    EncodingError,
    EnumerationOrderError,
    TargetBeyondBoundError,
    UndefinedMeasureError,
)
from layeredkc.layered_kc import EMPTY_REQUEST, LayeredRequest
from layeredkc.measures import MeasureSpec


@dataclass(frozen=True)
class OracleUse:
    value: int
    beyond_bound: bool = False


@dataclass(frozen=True)
class CodePrefix:
    """
    y together with the oracle-use m(n) of every n <= |x|.

    `boundary` is set when the tail minimum for n is reached at |x| and the
    measure may still drop beyond it.
    """
    y: BitString
    use_table: Dict[int, int] = field(compare=False)
    shift: int = 0
    n: int = 0
    boundary: bool = False

    @property
    def use(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class Universe:
    """
    Finite prefix-closed set of strings enumerated in length-lexicographic order.
    """
    strings: Tuple[BitString, ...]
    label: str

    def __contains__(self, s: BitString) -> bool:
        return s in self.members

    def __len__(self) -> int:
        return len(self.strings)

    @cached_property
    def members(self) -> FrozenSet[BitString]:
        return frozenset(self.strings)


class OracleTape:
    """
    Read access to y that remembers how many leading bits were queried.
    """

    def __init__(self, y: BitString):
        self._y = y
        self.used = 0

    def __len__(self) -> int:
        return len(self._y)

    def read(self, i: int) -> int:
        if i >= len(self._y):
            raise DecodingError(f"not a code: ran out of bits after {len(self._y)}")
        self.used = max(self.used, i + 1)
        return self._y[i]


def _value(I: MeasureSpec, s: BitString) -> int:
    value = I(s)
    if value is None:
        raise UndefinedMeasureError(f"measure {I.identifier()} is undefined on {render(s)}")
    return value


def i_predecessor(I: MeasureSpec, tau: BitString) -> Optional[BitString]:
    """
    Longest proper prefix σ of tau with I(σ) < I(tau), or None.
    I may be undefined on λ; any other undefined prefix is an error.
    """
    target = _value(I, tau)
    for i in range(len(tau) - 1, -1, -1):
        sigma = frozenbitarray(tau[:i])
        value = I(sigma)
        if value is None:
            if i == 0:
                return None
            raise UndefinedMeasureError(f"measure {I.identifier()} is undefined on {render(sigma)}")
        if value < target:
            return sigma
    return None


def build_requests(I: MeasureSpec, strings: Iterable[BitString]) -> List[LayeredRequest]:
    """
    One request per enumerated string where I is defined, of length I(τ),
    pointing at the request of τ's I-predecessor (or at 0).
    """
    requests = [EMPTY_REQUEST]
    index_of: Dict[BitString, int] = {}
    for tau in strings:
        value = I(tau)
        if value is None:
            continue
        if tau in index_of:
            raise EnumerationOrderError(f"{render(tau)} enumerated twice")
        if len(tau):
            parent = frozenbitarray(tau[:-1])
            if parent not in index_of and (len(parent) > 0 or I(parent) is not None):
                raise EnumerationOrderError(f"{render(tau)} enumerated before its prefix {render(parent)}")
        predecessor = i_predecessor(I, tau)
        pointer = index_of[predecessor] if predecessor is not None else 0
        index_of[tau] = len(requests)
        requests.append(LayeredRequest(pointer, value, tau))
    return requests


def tail_minima(values: Dict[int, int]) -> List[int]:
    """
    Lengths i with values[i] strictly below every value at a larger length,
    in increasing order. This is the cascade n_0 < n_1 < ... where n_0 is the
    largest argmin and each next term is the largest argmin of the remaining tail.
    """
    result = []
    best = None
    for i in sorted(values, reverse=True):
        if best is None or values[i] < best:
            result.append(i)
            best = values[i]
    return list(reversed(result))


def _prefix_values(I: MeasureSpec, x: BitString) -> Dict[int, int]:
    values = {}
    for i in range(len(x) + 1):
        value = I(frozenbitarray(x[:i]))
        if value is None:
            if i == 0:
                continue
            raise UndefinedMeasureError(f"measure {I.identifier()} is undefined on the prefix of length {i}")
        values[i] = value
    return values


def local_minima(I: MeasureSpec, x: BitString) -> List[int]:
    return tail_minima(_prefix_values(I, x))


def use_table(I: MeasureSpec, x: BitString) -> Dict[int, OracleUse]:
    """
    m(n) = min over n <= i <= |x| of I(x↾i), for every 0 <= n <= |x|.
    m(0) is 0 by convention.
    """
    values = _prefix_values(I, x)
    table: Dict[int, OracleUse] = {}
    best = None
    for i in range(len(x), 0, -1):
        best = values[i] if best is None else min(best, values[i])
        at_bound = values[len(x)] == best
        table[i] = OracleUse(best, at_bound and not I.monotone)
    table[0] = OracleUse(0, False)
    return table


def oracle_use(I: MeasureSpec, x: BitString, n: int) -> OracleUse:
    if n > len(x):
        raise TargetBeyondBoundError(f"n={n} is beyond the working bound {len(x)}")
    if n == 0:
        return OracleUse(0, False)
    values = [_value(I, frozenbitarray(x[:i])) for i in range(n, len(x) + 1)]
    best = min(values)
    return OracleUse(best, values[-1] == best and not I.monotone)


def working_universe(I: MeasureSpec, bound: int, sources: Optional[Sequence[BitString]] = None,
                     limits: Limits = DEFAULT_LIMITS) -> Universe:
    """
    The strings the construction enumerates. It never depends on the source
    being coded, so the decoder can rebuild it.
    """
    if sources:
        closure = set()
        for source in sources:
            source = frozenbitarray(source[:bound])
            closure.update(prefixes(source, proper=False))
        payload = "\n".join(sorted(render(s) for s in sources)).encode("ascii")
        label = "sources:" + hashlib.sha256(payload).hexdigest()
        candidates = closure
    elif I.domain is not None:
        candidates = {s for s in I.domain if len(s) <= bound}
        label = "domain"
    else:
        if bound > limits.full_universe_bound:
            raise ConfigError(
                f"enumerating every string up to length {bound} is too large "
                f"(limit {limits.full_universe_bound}); supply a universe file")
        candidates = set(all_strings(bound))
        label = f"full:{bound}"
    strings = tuple(sorted((s for s in candidates if I(s) is not None), key=length_lex_key))
    return Universe(strings, label)


def required_shift(certificate: DyadicWeight, q: AvoidSet) -> int:
    """
    Least c >= 0 with certificate * 2^-c + wgt(Q) < 1.
    """
    if q.weight >= ONE:
        raise CombinedBudgetError(f"avoid set weight {q.weight} leaves no room for codes")
    c = 0
    while certificate.scaled(c) + q.weight >= ONE:
        c += 1
    return c


@dataclass
class StreamCodebook:
    """
    Replayed construction for one (measure, Q, universe): every code and the
    payload it stands for.
    """
    measure: MeasureSpec
    q: AvoidSet
    universe: Universe
    shift: int
    requests: List[LayeredRequest]
    run: AvoidanceRun
    payloads: Dict[BitString, BitString]
    request_index: Dict[BitString, int]

    @cached_property
    def longest_code(self) -> int:
        return max((len(c) for c in self.payloads), default=0)


def build_codebook(I: MeasureSpec, q: AvoidSet, universe: Universe,
                   limits: Limits = DEFAULT_LIMITS) -> StreamCodebook:
    shift = required_shift(I.certificate, q)
    shifted = I.shifted(shift)
    requests = build_requests(shifted, universe.strings)
    run = AvoidingPipeline(q, limits).run(requests)
    solver = run.solver
    payloads = {code: run.requests[solver.owner[code]].payload for code in solver.codes()}
    request_index = {r.payload: i for i, r in enumerate(requests) if i > 0}
    return StreamCodebook(shifted, q, universe, shift, requests, run, payloads, request_index)


def encode_with(codebook: StreamCodebook, x: BitString, n: int) -> CodePrefix:
    if n > len(x):
        raise TargetBeyondBoundError(f"n={n} is beyond the source length {len(x)}")
    if x not in codebook.request_index:
        raise EncodingError(f"source {render(x)} is not in the working universe")

    table = use_table(codebook.measure, x)
    if n == 0:
        return CodePrefix(EMPTY, {k: v.value for k, v in table.items()}, codebook.shift, 0, False)

    candidates = [c for c in codebook.run.codes_of(codebook.request_index[x]) if not codebook.q.covers(c)]
    if not candidates:
        raise EncodingError(f"every code for {render(x)} has a prefix in the avoid set")
    y_full = min(candidates, key=lambda c: c.to01())

    use = table[n]
    y = frozenbitarray(y_full[:use.value])
    payload = codebook.payloads.get(y)
    if payload is None or len(payload) < n or payload != x[:len(payload)]:
        raise EncodingError(f"no code of length {use.value} on the chain of {render(x)}")
    return CodePrefix(y, {k: v.value for k, v in table.items()}, codebook.shift, n, use.beyond_bound)


def decode_with(codebook: StreamCodebook, y: Union[BitString, OracleTape], n: int) -> BitString:
    return decode_stream(codebook.payloads, y, n, codebook.longest_code)


def decode_stream(payloads: Mapping[BitString, BitString], y: Union[BitString, OracleTape], n: int,
                  longest: Optional[int] = None) -> BitString:
    """
    Read y bit by bit and stop at the first code whose payload has length >= n.
    """
    if n == 0:
        return EMPTY
    tape = y if isinstance(y, OracleTape) else OracleTape(y)
    if longest is None:
        longest = max((len(c) for c in payloads), default=0)
    read = bitarray()
    for i in range(longest):
        read.append(tape.read(i))
        payload = payloads.get(frozenbitarray(read))
        if payload is not None and len(payload) >= n:
            return frozenbitarray(payload[:n])
    raise DecodingError(f"not a code: no code with a payload of length >= {n} on the stream")


def encode(x: BitString, I: MeasureSpec, q: AvoidSet, n: int, universe: Optional[Universe] = None,
           bound: Optional[int] = None, limits: Limits = DEFAULT_LIMITS) -> CodePrefix:
    """
    Code x↾n into a prefix y of length min over n <= i <= |x| of I(x↾i)
    (plus the shift c when I has to be rescaled to make room for Q).
    """
    if universe is None:
        universe = working_universe(I, len(x) if bound is None else bound, limits=limits)
    codebook = build_codebook(I, q, universe, limits)
    return encode_with(codebook, x, n)


def decode(y: Union[BitString, OracleTape], I: MeasureSpec, q: AvoidSet, n: int,
           universe: Optional[Universe] = None, bound: Optional[int] = None,
           shift: Optional[int] = None, limits: Limits = DEFAULT_LIMITS) -> BitString:
    if universe is None:
        if bound is None:
            raise ConfigError("decode needs the universe or the working bound used by the encoder")
        universe = working_universe(I, bound, limits=limits)
    codebook = build_codebook(I, q, universe, limits)
    if shift is not None and shift != codebook.shift:
        raise DecodingError(f"code was written with shift {shift}, replay computes {codebook.shift}")
    return decode_with(codebook, y, n)
