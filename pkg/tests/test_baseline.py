import pytest

from generators import random_bits
from layeredkc.baseline import (
    BASELINE_LABEL,
    block_decode,
    block_encode,
    comparison_source,
    header_codebook,
    header_length,
    overhead_report,
    plan,
    schedule_names,
)
from layeredkc.bitcore import DyadicWeight, bits, is_prefix_free
from layeredkc.errors import ConfigError, DecodingError, TargetBeyondBoundError
from layeredkc.measures import length_plus_log, length_plus_log_measure
from layeredkc.run_compare import COMPARE_LIMITS
from layeredkc.stream_coder import OracleTape

LPL = length_plus_log_measure()


@pytest.mark.parametrize("n, schedule, lengths, overshoot", [
    (10, "linear", (1, 2, 3, 4), 0),
    (10, "quadratic", (1, 4, 9), 4),
    (10, "exponential", (1, 2, 4, 8), 5),
    (1, "linear", (1,), 0),
    (1, "quadratic", (1,), 0),
    (1, "exponential", (1,), 0),
    (0, "linear", (), 0),
])
def test_plan(n, schedule, lengths, overshoot):
    block_plan = plan(n, schedule)
    assert block_plan.block_lengths == lengths
    assert block_plan.k_n == len(lengths)
    assert block_plan.overshoot == overshoot


def test_plan_blocks_for():
    block_plan = plan(10)
    assert block_plan.boundaries == (0, 1, 3, 6, 10)
    assert [block_plan.blocks_for(m) for m in (0, 1, 2, 3, 4, 7, 10)] == [0, 1, 2, 2, 3, 4, 4]
    assert plan(55).k_n == 10
    long_plan = plan(100, "exponential")
    assert (long_plan.k_n, long_plan.last_block, long_plan.overshoot) == (7, 64, 27)
    with pytest.raises(TargetBeyondBoundError):
        block_plan.blocks_for(11)


def test_unknown_schedule():
    assert schedule_names() == ["linear", "quadratic", "exponential"]
    with pytest.raises(ConfigError):
        plan(5, "cubic")


def test_header_lengths():
    assert [header_length(b) for b in (1, 2, 3, 4, 7, 8)] == [3, 5, 5, 7, 7, 9]
    assert sum(header_length(b) for b in range(1, 24)) == 201
    assert sum(header_length(b) for b in range(1, 92)) == 1125
    assert DyadicWeight.of_lengths(header_length(b) for b in range(1, 1000)) <= DyadicWeight.power(2)
    codes = header_codebook(64)
    assert is_prefix_free(list(codes.values()))
    assert all(len(codes[b]) == header_length(b) for b in codes)


@pytest.mark.parametrize("schedule", ["linear", "quadratic", "exponential"])
def test_block_roundtrip(rng, schedule):
    for _ in range(20):
        x = random_bits(rng, rng.randint(1, 40))
        block_plan = plan(len(x), schedule)
        code = block_encode(x, None, block_plan)
        assert code.header_bits + len(x) == len(code.y)
        for n in range(len(x) + 1):
            tape = OracleTape(code.y)
            assert block_decode(tape, block_plan, n) == x[:n]
            assert tape.used == code.use_table[n]


def test_final_block_is_cut_short(rng):
    x = random_bits(rng, 20)
    code = block_encode(x, LPL, plan(20, "quadratic"))
    assert code.block_lengths == (1, 4, 9, 6)
    assert code.use_table[20] == len(code.y)


def test_block_errors(rng):
    x = random_bits(rng, 8)
    with pytest.raises(TargetBeyondBoundError):
        block_encode(x, None, plan(9))
    with pytest.raises(TargetBeyondBoundError):
        block_decode(x, plan(8), 9)
    with pytest.raises(DecodingError):
        block_decode(bits("00"), plan(8), 1)


@pytest.fixture(scope="module")
def linear_report():
    ns = [256, 1024, 4096]
    x = comparison_source(ns)
    return overhead_report(x, LPL, ns, "linear", COMPARE_LIMITS)


def test_comparison_source_fills_last_block():
    assert len(comparison_source([4096])) == 4186
    assert len(comparison_source([10], "quadratic")) == 14


def test_overhead_report_goldens(linear_report):
    assert linear_report.label == BASELINE_LABEL
    assert linear_report.source_length == 4186
    rows = {row.n: row for row in linear_report.rows}
    assert (rows[256].k_n, rows[4096].k_n) == (23, 91)
    assert (rows[256].ideal, rows[4096].ideal) == (length_plus_log(256), length_plus_log(4096))
    assert (rows[256].baseline_use, rows[4096].baseline_use) == (477, 5311)
    assert (rows[256].baseline_overhead, rows[4096].baseline_overhead) == (203, 1189)
    assert linear_report.ratio(256, 4096) >= 3
    assert linear_report.ratio(256, 5000) is None


def test_layered_use_never_exceeds_baseline(linear_report):
    for row in linear_report.rows:
        assert row.layered_use == row.ideal
        assert row.baseline_use >= row.layered_use
        assert row.as_dict()["layered_overhead"] == 0


def test_overhead_report_rejects_long_targets():
    with pytest.raises(TargetBeyondBoundError):
        overhead_report(comparison_source([5]), LPL, [100])


def test_exponential_overhead_tracks_n_at_boundaries():
    ns = [16, 64, 256]
    x = comparison_source(ns, "exponential")
    assert len(x) == 511
    report = overhead_report(x, LPL, ns, "exponential", COMPARE_LIMITS)
    rows = {row.n: row for row in report.rows}
    # n = 2^k opens a block of length n, so n-1 extra source bits are read
    for n, row in rows.items():
        assert (row.last_block, row.overshoot) == (n, n - 1)
        assert row.layered_use == row.ideal
        assert row.baseline_overhead >= n
    assert [rows[n].baseline_use for n in ns] == [31 + 35, 127 + 63, 511 + 99]
    assert [rows[n].baseline_overhead for n in ns] == [40, 112, 336]
