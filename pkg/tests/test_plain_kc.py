import itertools

import pytest

from generators import random_lengths
from layeredkc.bitcore import EMPTY, ONE, all_strings, bits, comparable, is_prefix, is_prefix_free, render
from layeredkc.config import Limits
from layeredkc.errors import BudgetExceededError, InvalidLengthError, SolverFailedError
from layeredkc.plain_kc import PlainSolver, check_state, clear_extension_exists, plain_init, plain_solve, plain_step

# binary partitions of n <= 64 with parts at most 32
MULTISETS_UP_TO_SIX = 27337


def test_golden_one_two_two():
    assert [render(c) for c in plain_solve(EMPTY, [1, 2, 2])] == ["0", "10", "11"]


def test_single_request_fillers():
    state, code = plain_step(plain_init(), 2)
    assert render(code) == "00"
    assert {p: render(f) for p, f in state.fillers} == {1: "1", 2: "01"}
    assert state.trace.sorted() == [1, 2]
    assert check_state(state) == []


def test_relativized_codes_extend_base():
    codes = plain_solve(bits("01"), [3, 4, 4])
    assert [render(c) for c in codes] == ["010", "0110", "0111"]
    with pytest.raises(BudgetExceededError):
        plain_solve(bits("01"), [3, 3, 4])


def test_length_must_exceed_base():
    with pytest.raises(InvalidLengthError):
        plain_step(plain_init(bits("01")), 2)
    with pytest.raises(InvalidLengthError):
        plain_step(plain_init(), 9, Limits(max_request_length=8))


def test_budget_error_carries_index():
    with pytest.raises(BudgetExceededError) as info:
        plain_solve(EMPTY, [1, 1, 3])
    assert info.value.index == 2


def test_failure_is_terminal():
    solver = PlainSolver()
    solver.request(1)
    solver.request(1)
    with pytest.raises(BudgetExceededError):
        solver.request(5)
    with pytest.raises(SolverFailedError):
        solver.request(5)


def test_clear_extension_exists():
    state, _ = plain_step(plain_init(), 1)
    assert clear_extension_exists(state, 1)
    state, _ = plain_step(state, 1)
    assert not clear_extension_exists(state, 7)


@pytest.mark.parametrize("lengths, length", [([1, 2, 3], 3), ([1, 2], 2)])
def test_clear_extension_after_greedy_prefix(lengths, length):
    state = plain_init()
    for step in lengths:
        state, _ = plain_step(state, step)
    assert clear_extension_exists(state, length)


def test_relativized_single_request():
    assert [render(c) for c in plain_solve(bits("00"), [3])] == ["000"]


def test_random_sequences_stay_sound(rng):
    for _ in range(1000):
        lengths = random_lengths(rng, rng.randint(1, 200), 20)
        state = plain_init()
        for length in lengths:
            state, code = plain_step(state, length)
            assert len(code) == length
        assert is_prefix_free(state.codes)
        assert check_state(state) == []


def test_exhaustive_up_to_six(rng):
    order = list(range(1, 7))
    rng.shuffle(order)
    leaves = 0

    def walk(i, state):
        nonlocal leaves
        if i == len(order):
            leaves += 1
            return
        length = order[i]
        while True:
            walk(i + 1, state)
            if state.weight.add_term(length) > ONE:
                with pytest.raises(BudgetExceededError):
                    plain_step(state, length)
                break
            state, code = plain_step(state, length)
            assert len(code) == length
        if i == len(order) - 1:
            # the leaves of this loop are prefixes of the last one
            assert is_prefix_free(state.codes)

    walk(0, plain_init())
    assert leaves == MULTISETS_UP_TO_SIX



def _brute_force_exists(lengths):
    chosen = []

    def place(i):
        if i == len(lengths):
            return True
        for s in all_strings(lengths[i], lengths[i]):
            if any(comparable(s, c) for c in chosen):
                continue
            chosen.append(s)
            if place(i + 1):
                return True
            chosen.pop()
        return False

    return place(0)


def test_greedy_agrees_with_brute_force_up_to_five(rng):
    for _ in range(300):
        lengths = [rng.randint(1, 5) for _ in range(rng.randint(1, 6))]
        exists = _brute_force_exists(sorted(lengths))
        try:
            plain_solve(EMPTY, lengths)
            greedy = True
        except BudgetExceededError:
            greedy = False
        assert greedy == exists


def test_codes_are_fresh_extensions_of_base(rng):
    base = bits("101")
    lengths = [rng.randint(4, 10) for _ in range(40)]
    state = plain_init(base)
    for length in lengths:
        if not clear_extension_exists(state, length):
            continue
        state, code = plain_step(state, length)
        assert is_prefix(base, code)
    assert all(not comparable(a, b) for a, b in itertools.combinations(state.codes, 2))
