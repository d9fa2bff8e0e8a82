import pytest

from generators import random_avoid_set, random_layered
from layeredkc.avoidance import (
    ADAPTIVE,
    EXPANSIONARY,
    AvoidingPipeline,
    AvoidSet,
    FilterState,
    check_avoids,
    filtered_step,
    interleave,
)
from layeredkc.bitcore import ONE, DyadicWeight, bits, is_prefix_free, render
from layeredkc.config import Limits
from layeredkc.errors import AvoidanceError, CombinedBudgetError, InvalidSequenceError
from layeredkc.layered_kc import LayeredRequest, check_solution, layer_prefix_free, sequence_weight

EXAMPLE = [
    LayeredRequest(None, 0),
    LayeredRequest(0, 2),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
]


def test_avoid_set_must_be_prefix_free():
    with pytest.raises(AvoidanceError) as info:
        AvoidSet((bits("01"), bits("011")))
    assert "01" in str(info.value) and "011" in str(info.value)


def test_avoid_set_basics():
    q = AvoidSet((bits("00"), bits("1")))
    assert q.weight == DyadicWeight.of_lengths([2, 1])
    assert q.covers(bits("001"))
    assert q.covers(bits("1"))
    assert not q.covers(bits("01"))
    assert q.prefix(1).members == (bits("00"),)
    assert q.digest() == AvoidSet((bits("00"), bits("1"))).digest()
    assert q.digest() != AvoidSet((bits("1"), bits("00"))).digest()
    assert not AvoidSet().covers(bits("0"))


def test_filtered_step_ejects_most_recent_covered_leaf():
    leaves = [bits("00"), bits("010"), bits("011")]
    q = AvoidSet((bits("01"),))
    f = filtered_step(leaves, q, FilterState())
    assert f.ejected == (bits("011"),)
    assert f.last_kind == ADAPTIVE
    f = filtered_step(leaves, q, f)
    assert f.ejected == (bits("011"), bits("010"))
    f = filtered_step(leaves, q, f)
    assert f.last_kind == EXPANSIONARY
    assert len(f.ejected) == 2


def test_worked_example_with_forbidden_prefix():
    run = AvoidingPipeline(AvoidSet((bits("00"),))).run(EXAMPLE)
    assert [(r.pointer, r.length) for r in run.requests] == [
        (None, 0), (0, 2), (0, 2), (2, 3), (2, 3), (2, 3), (2, 3)]
    assert [[render(c) for c in s] for s in run.solver.sets] == [
        ["-"], ["00"], ["01", "10"], ["010"], ["011"], ["100"], ["101"]]
    assert run.filter_state.ejected == (bits("00"),)
    assert run.index_map.outdated == {1}
    assert run.index_map.current == {0: 0, 1: 2, 2: 3, 3: 4, 4: 5, 5: 6}
    assert run.weight == ONE
    assert sorted(render(c) for c in run.live_leaves()) == ["010", "011", "100", "101"]
    assert [render(c) for c in run.codes_of(1)] == ["00", "01", "10"]
    assert [s.kind for s in run.stages[:2]] == [EXPANSIONARY, ADAPTIVE]


def test_interleave_returns_sequence_and_index_map():
    requests, index_map = interleave(EXAMPLE, AvoidSet((bits("00"),)))
    assert len(requests) == 7
    assert index_map.lprime_indices(1) == [1, 2]


def test_empty_avoid_set_changes_nothing():
    run = AvoidingPipeline(AvoidSet()).run(EXAMPLE)
    assert [(r.pointer, r.length) for r in run.requests] == [(r.pointer, r.length) for r in EXAMPLE]
    assert run.index_map.outdated == set()


def test_combined_budget_is_enforced():
    source = [LayeredRequest(None, 0), LayeredRequest(0, 1), LayeredRequest(0, 2)]
    with pytest.raises(CombinedBudgetError) as info:
        AvoidingPipeline(AvoidSet((bits("11"), bits("10")))).run(source)
    assert info.value.index == 2


def test_source_must_start_with_empty_request():
    with pytest.raises(InvalidSequenceError):
        AvoidingPipeline(AvoidSet()).run([LayeredRequest(0, 2)])


def test_adaptive_run_limit():
    source = [LayeredRequest(None, 0), LayeredRequest(0, 3), LayeredRequest(1, 6)]
    q = AvoidSet((bits("0"),))
    with pytest.raises(AvoidanceError):
        AvoidingPipeline(q, Limits(adaptive_run_limit=1)).run(source)


def test_random_pairs_avoid_and_respect_weight(rng):
    for _ in range(200):
        q = random_avoid_set(rng, DyadicWeight.power(2), max_len=6)
        source = random_layered(rng, rng.randint(1, 20), max_len=10, max_depth=4, budget=ONE - q.weight)
        run = AvoidingPipeline(q).run(source)
        assert check_avoids(run.live_leaves(), q)
        assert run.weight <= sequence_weight(source) + q.weight
        ejected = run.filter_state.ejected
        ejected_weight = DyadicWeight.of_lengths(len(d) for d in ejected)
        assert sequence_weight(run.requests) == sequence_weight(source) + ejected_weight
        assert is_prefix_free(ejected)
        assert all(q.covers(d) for d in ejected)
        assert sequence_weight(run.requests) == run.weight
        assert check_solution(run.requests, run.solver.sets)
        assert layer_prefix_free(run.solver)


def test_incremental_and_rescanning_pipelines_agree(rng):
    for _ in range(50):
        q = random_avoid_set(rng, DyadicWeight.power(2), max_len=5)
        source = random_layered(rng, rng.randint(1, 15), max_len=9, max_depth=3, budget=ONE - q.weight)
        fast = AvoidingPipeline(q).run(source)
        slow = AvoidingPipeline(q, incremental=False).run(source)
        assert fast.requests == slow.requests
        assert fast.filter_state.ejected == slow.filter_state.ejected
        assert fast.solver.snapshot() == slow.solver.snapshot()
