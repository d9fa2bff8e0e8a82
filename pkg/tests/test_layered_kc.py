import pytest

from generators import random_layered
from layeredkc.bitcore import EMPTY, DyadicWeight, render
from layeredkc.errors import BudgetExceededError, InvalidSequenceError
from layeredkc.layered_kc import (
    LayeredRequest,
    check_solution,
    check_trace_monotonicity,
    characteristic_sequence,
    codes_up_to_depth,
    depth_reduce,
    format_snapshot,
    layer_prefix_free,
    layered_solve,
    layered_step,
    LayeredState,
    reduce_depth,
    request_depths,
    sequence_weight,
    solve_layered,
    validate_sequence,
)

EXAMPLE = [
    LayeredRequest(None, 0),
    LayeredRequest(0, 2),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
    LayeredRequest(1, 3),
]


def _rendered(snapshot):
    return [[render(c) for c in codes] for codes in snapshot]


def test_worked_example_sets():
    final = layered_solve(EXAMPLE)[-1]
    assert _rendered(final) == [["-"], ["00", "01"], ["000"], ["001"], ["010"], ["011"]]
    assert check_solution(EXAMPLE, final)


def test_worked_example_bases():
    state = solve_layered(EXAMPLE)
    assert [render(e.base) for e in state.events] == ["-", "00", "00", "-", "01"]
    assert [e.base_depth for e in state.events] == [0, 1, 1, 0, 1]


def test_snapshots_grow_stage_by_stage():
    snapshots = layered_solve(EXAMPLE)
    assert len(snapshots) == len(EXAMPLE)
    assert _rendered(snapshots[0]) == [["-"]]
    assert _rendered(snapshots[1]) == [["-"], ["00"]]
    assert format_snapshot(snapshots[-1])[1] == "S1: 00 01"


def test_characteristic_sequence():
    assert characteristic_sequence(EXAMPLE, 3).indices == (0, 1, 3)
    assert characteristic_sequence(EXAMPLE, 3).depth == 2


def test_code_tree_view():
    state = solve_layered(EXAMPLE)
    code = state.sets[5][0]
    assert state.parent_of(code) == state.sets[1][1]
    assert state.ancestors(code) == [EMPTY, state.sets[1][1]]
    assert [render(c) for c in state.codes_of_depth(1)] == ["00", "01"]
    assert sorted(render(c) for c in state.leaves()) == ["000", "001", "010", "011"]


def test_validate_sequence_rejects_bad_requests():
    with pytest.raises(InvalidSequenceError):
        validate_sequence([LayeredRequest(None, 0), LayeredRequest(2, 3)])
    with pytest.raises(InvalidSequenceError) as info:
        validate_sequence([LayeredRequest(None, 0), LayeredRequest(0, 2), LayeredRequest(1, 2)])
    assert info.value.index == 2
    with pytest.raises(InvalidSequenceError):
        validate_sequence([LayeredRequest(0, 0)])


def test_overweight_sequence_is_rejected():
    with pytest.raises(BudgetExceededError):
        layered_solve([LayeredRequest(None, 0), LayeredRequest(0, 1), LayeredRequest(0, 1), LayeredRequest(0, 2)])


def test_check_solution_rejects_wrong_sets():
    final = [list(s) for s in layered_solve(EXAMPLE)[-1]]
    final[3] = [final[2][0]]
    assert not check_solution(EXAMPLE, final)
    assert not check_solution(EXAMPLE, final[:-1])


def test_random_sequences_keep_invariants(rng):
    for _ in range(500):
        requests = random_layered(rng, rng.randint(1, 30), max_len=12, max_depth=5)
        depths = request_depths(requests)
        state = LayeredState()
        for request in requests[1:]:
            layered_step(state, request)
            event = state.events[-1]
            added_depths = [depths[index] for index, _ in event.added]
            assert added_depths == list(range(event.base_depth + 1, depths[event.request] + 1))
            assert check_trace_monotonicity(state)
        assert layer_prefix_free(state)
        assert check_solution(requests, state.sets)
        assert state.weight <= sequence_weight(requests)


def test_depth_reduction_on_worked_example():
    state = solve_layered(EXAMPLE)
    reduced = depth_reduce(EXAMPLE, state.events)
    assert [(r.pointer, r.length) for r in reduced] == [(None, 0), (0, 2), (0, 2)]
    assert sequence_weight(reduced) == DyadicWeight.power(1)


def test_depth_reduction_keeps_lower_codes(rng):
    for _ in range(100):
        requests = random_layered(rng, rng.randint(2, 20), max_len=10, max_depth=3)
        depths = request_depths(requests)
        d = max(depths) - 1
        if d < 1:
            continue
        state = solve_layered(requests)
        reduction = reduce_depth(requests, state.events)
        assert sequence_weight(reduction.requests) <= sequence_weight(requests)
        reduced_state = solve_layered(reduction.requests)
        original = {c: state.depths[state.owner[c]] for c in codes_up_to_depth(state, d)}
        mirrored = {c: reduced_state.depths[reduced_state.owner[c]] for c in reduced_state.codes()}
        assert mirrored == original
