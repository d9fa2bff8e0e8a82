import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from layeredkc.baseline import (
    BASELINE_LABEL,
    comparison_source,
    layered_codebook,
    layered_uses,
    overhead_report,
)
from layeredkc.bitcore import BitString, bits, render
from layeredkc.config import Limits
from layeredkc.utils.formats import load_measure
from layeredkc.utils.report_utils import format_table, save_csv_report, save_json_report

# Sources for n up to a few thousand need codes longer than the default limit.
COMPARE_LIMITS = Limits(max_request_length=8192)

ROW_COLUMNS = (
    "n",
    "k_n",
    "last_block",
    "overshoot",
    "ideal",
    "layered_use",
    "baseline_use",
    "layered_overhead",
    "baseline_overhead",
)


def _progress(verbose: bool, message: str) -> None:
    if verbose:
        print(message, file=sys.stderr)


def compare_row(measure_ref: str, source: str, n: int, schedule: str, limits: Limits) -> Dict[str, int]:
    """
    One row computed from scratch; arguments are plain values so the call can
    run in a worker process.
    """
    measure = load_measure(measure_ref)
    x = bits(source)
    return overhead_report(x, measure, [n], schedule, limits).rows[0].as_dict()


def run_comparison(measure_ref: str, ns: Sequence[int], schedule: str = "linear",
                   source: Optional[BitString] = None, limits: Limits = COMPARE_LIMITS,
                   workers: int = 1, verbose: bool = False,
                   json_output: Optional[Union[str, Path]] = None,
                   csv_output: Optional[Union[str, Path]] = None) -> Dict:
    """
    Build the overhead comparison table for every n.

    Args:
        measure_ref: builtin measure name or measure table file
        ns: the lengths to report on
        schedule: block schedule of the baseline
        source: source bits (default: alternating bits filling every block for max(ns))
        limits: solver limits for the layered column
        workers: worker processes, one row per task when above 1
        verbose: print progress to stderr
        json_output: path of the JSON summary, if wanted
        csv_output: path of the delimited table, if wanted
    """
    measure = load_measure(measure_ref)
    x = comparison_source(ns, schedule) if source is None else source
    ns = sorted(set(ns))

    results = {
        "summary": {
            "label": BASELINE_LABEL,
            "measure": measure.identifier(),
            "schedule": schedule,
            "source_length": len(x),
            "rows_requested": len(ns),
            "rows_completed": 0,
            "rows_failed": 0,
            "overhead_ratio": None,
        },
        "rows": [],
        "failed": [],
    }

    _progress(verbose, f"Comparing {len(ns)} lengths on a source of {len(x)} bits ({schedule} schedule)...")

    rows: Dict[int, Dict[str, int]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {n: pool.submit(compare_row, measure_ref, render(x, empty=""), n, schedule, limits) for n in ns}
            for n, future in futures.items():
                try:
                    rows[n] = future.result()
                    _progress(verbose, f"Row n={n} done")
                except Exception as e:
                    print(f"Error running row n={n}: {e}", file=sys.stderr)
                    results["failed"].append({"n": n, "error": str(e)})
    else:
        _progress(verbose, "Building the layered code stream...")
        codebook = layered_codebook(x, measure, limits)
        for n in ns:
            try:
                layered = layered_uses(x, measure, [n], limits, codebook)
                report = overhead_report(x, measure, [n], schedule, limits, layered=layered)
                rows[n] = report.rows[0].as_dict()
                _progress(verbose, f"Row n={n} done")
            except Exception as e:
                print(f"Error running row n={n}: {e}", file=sys.stderr)
                results["failed"].append({"n": n, "error": str(e)})
                continue

    results["rows"] = [rows[n] for n in ns if n in rows]
    results["summary"]["rows_completed"] = len(results["rows"])
    results["summary"]["rows_failed"] = len(results["failed"])
    if len(results["rows"]) >= 2 and results["rows"][0]["baseline_overhead"] > 0:
        first, last = results["rows"][0], results["rows"][-1]
        results["summary"]["overhead_ratio"] = round(last["baseline_overhead"] / first["baseline_overhead"], 4)

    if json_output is not None:
        saved = save_json_report(results, json_output)
        if saved:
            results["summary"]["json_output"] = saved
    if csv_output is not None:
        saved = save_csv_report(results["rows"], ROW_COLUMNS, csv_output)
        if saved:
            results["summary"]["csv_output"] = saved
    return results


def summary_lines(results: Dict) -> List[str]:
    """
    The aligned table followed by the closing banner and one line per row.
    """
    summary = results["summary"]
    lines = format_table(results["rows"], ROW_COLUMNS)
    lines.append("")
    lines.append("=== OVERHEAD COMPARISON COMPLETE ===")
    lines.append(f"Baseline: {summary['label']} ({summary['schedule']} schedule)")
    lines.append(f"Measure: {summary['measure']}")
    lines.append(f"Rows completed: {summary['rows_completed']} of {summary['rows_requested']}")
    for row in results["rows"]:
        lines.append(f"n={row['n']}: baseline overhead {row['baseline_overhead']}, "
                     f"layered overhead {row['layered_overhead']}")
    if summary["overhead_ratio"] is not None:
        lines.append(f"Baseline overhead ratio (largest/smallest n): {summary['overhead_ratio']}")
    if "json_output" in summary:
        lines.append(f"Summary results saved to: {summary['json_output']}")
    if "csv_output" in summary:
        lines.append(f"Table saved to: {summary['csv_output']}")
    return lines
