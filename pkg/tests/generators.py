import random
from typing import List, Optional, Tuple

from bitarray import frozenbitarray

from layeredkc.avoidance import AvoidSet
from layeredkc.bitcore import ONE, BitString, DyadicWeight, comparable, prefixes
from layeredkc.dynamic_coder import ApproxRun, build_universal
from layeredkc.errors import RunValidationError
from layeredkc.layered_kc import EMPTY_REQUEST, LayeredRequest, sequence_weight


def random_bits(rng: random.Random, length: int) -> BitString:
    return frozenbitarray([rng.getrandbits(1) for _ in range(length)])


def random_lengths(rng: random.Random, count: int, max_len: int, budget: DyadicWeight = ONE) -> List[int]:
    """
    Up to `count` lengths in 1..max_len whose weight stays within budget.
    """
    lengths = []
    weight = DyadicWeight.zero()
    for _ in range(count):
        length = rng.randint(1, max_len)
        if weight.add_term(length) > budget:
            continue
        weight = weight.add_term(length)
        lengths.append(length)
    return lengths


def random_layered(rng: random.Random, count: int, max_len: int = 12, max_depth: int = 5,
                   budget: DyadicWeight = ONE) -> List[LayeredRequest]:
    requests = [EMPTY_REQUEST]
    depths = [0]
    weight = DyadicWeight.zero()
    for _ in range(count):
        parents = [i for i, r in enumerate(requests) if depths[i] < max_depth and r.length < max_len]
        pointer = rng.choice(parents)
        length = rng.randint(requests[pointer].length + 1, max_len)
        if weight.add_term(length) > budget:
            continue
        weight = weight.add_term(length)
        requests.append(LayeredRequest(pointer, length))
        depths.append(depths[pointer] + 1)
    return requests


def random_avoid_set(rng: random.Random, max_weight: DyadicWeight, max_len: int = 8, attempts: int = 12) -> AvoidSet:
    members: List[BitString] = []
    weight = DyadicWeight.zero()
    for _ in range(attempts):
        candidate = random_bits(rng, rng.randint(1, max_len))
        if any(comparable(candidate, m) for m in members):
            continue
        if weight.add_term(len(candidate)) > max_weight:
            continue
        weight = weight.add_term(len(candidate))
        members.append(candidate)
    return AvoidSet(tuple(members))


def prefix_closure(sources: List[BitString]) -> List[BitString]:
    closure = set()
    for source in sources:
        closure.update(p for p in prefixes(source, proper=False) if len(p))
    return sorted(closure, key=lambda s: (len(s), s.to01()))


def random_run(rng: random.Random, q: AvoidSet, sources: int = 3, maxlen: int = 12, updates: int = 30,
               c: int = 1) -> Tuple[ApproxRun, List[BitString]]:
    """
    A scripted run over the prefix closure of a few random sources.

    Starts from K_0(σ) = 2|σ|+2. A drop is kept when the loader and the
    weight bounds still accept the run. Trailing updates are dropped until the
    universal sequence fits next to q.
    """
    picked = [random_bits(rng, rng.randint(1, maxlen)) for _ in range(sources)]
    strings = prefix_closure(picked)
    initial = {s: 2 * len(s) + 2 for s in strings}
    current = dict(initial)
    script: List[Tuple[int, BitString, int]] = []

    for _ in range(updates * 4):
        if len(script) >= updates:
            break
        tau = rng.choice(strings)
        if current[tau] <= 1:
            continue
        value = rng.randint(max(1, current[tau] - 4), current[tau] - 1)
        attempt = script + [(len(script) + 1, tau, value)]
        try:
            run = ApproxRun(initial, attempt, c=c, universe_maxlen=maxlen)
        except RunValidationError:
            continue
        if run.final_weight() + q.weight >= ONE:
            continue
        script = attempt
        current[tau] = value

    while True:
        run = ApproxRun(initial, script, c=c, universe_maxlen=maxlen)
        if sequence_weight(build_universal(run).requests) + q.weight <= ONE:
            return run, picked
        script.pop()


def random_source_set(rng: random.Random, count: int, length: int, x: Optional[BitString] = None) -> List[BitString]:
    sources = [random_bits(rng, length) for _ in range(count)]
    if x is not None:
        sources.append(x)
    return sources
