import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from layeredkc.avoidance import AvoidSet
from layeredkc.baseline import schedule_names
from layeredkc.bitcore import EMPTY, render
from layeredkc.config import DEFAULT_MAX_REQUEST_LENGTH, Limits
from layeredkc.dynamic_coder import build_dynamic_codebook, dynamic_encode_with
from layeredkc.errors import ConfigError, DecodingError, LayeredKCError
from layeredkc.layered_kc import format_snapshot, layered_solve, solve_layered
from layeredkc.measures import LENGTH_PLUS_LOG
from layeredkc.plain_kc import plain_solve
from layeredkc.run_compare import COMPARE_LIMITS, run_comparison, summary_lines
from layeredkc.stream_coder import (
    build_codebook,
    decode_stream,
    decode_with,
    encode_with,
    use_table,
    working_universe,
)
from layeredkc.utils.formats import (
    CodeFile,
    format_code_file,
    format_snapshots,
    load_avoid_set,
    load_code_file,
    load_lengths,
    load_measure,
    load_requests,
    load_run,
    load_source,
    load_universe,
    read_lines,
    write_lines,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_DECODE = 3


class _Parser(argparse.ArgumentParser):
    """
    Usage errors exit with status 1 and a single 'Error:' line.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    """
    Parsed and validated command-line settings for one subcommand.
    """
    command: str
    measure: Optional[str] = None
    avoid: Optional[str] = None
    source: Optional[str] = None
    bound: Optional[int] = None
    n: Optional[int] = None
    schedule: str = "linear"
    out: Optional[str] = None
    verbose: bool = False
    lengths: Optional[str] = None
    base: str = ""
    requests: Optional[str] = None
    code: Optional[str] = None
    universe: Optional[str] = None
    run: Optional[str] = None
    ns: List[int] = field(default_factory=list)
    workers: int = 1
    json_output: Optional[str] = None
    csv_output: Optional[str] = None
    all_stages: bool = False
    max_request_length: Optional[int] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = {name for name in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in vars(args).items() if k in known})

    @property
    def limits(self) -> Limits:
        if self.max_request_length is None:
            return COMPARE_LIMITS if self.command == "compare" else Limits()
        return Limits(max_request_length=self.max_request_length)

    def validate(self) -> "RunConfig":
        for path in (self.lengths, self.requests, self.avoid, self.code, self.universe, self.run):
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"file not found: {path}")
        if self.n is not None and self.n < 0:
            raise ConfigError(f"--n must be non-negative, got {self.n}")
        if self.bound is not None and self.bound < 0:
            raise ConfigError(f"--bound must be non-negative, got {self.bound}")
        if self.n is not None and self.bound is not None and self.n > self.bound:
            raise ConfigError(f"--n={self.n} is larger than --bound={self.bound}")
        if self.max_request_length is not None and self.max_request_length < 1:
            raise ConfigError("--max-request-length must be positive")
        if self.command == "compare":
            if not self.ns or any(n < 1 for n in self.ns):
                raise ConfigError("--ns needs positive lengths")
            if self.workers < 1:
                raise ConfigError("--workers must be at least 1")
        return self

    def progress(self, message: str) -> None:
        if self.verbose:
            print(message, file=sys.stderr)


def _emit(config: RunConfig, lines: Sequence[str]) -> None:
    if config.out is not None:
        saved = write_lines(config.out, lines)
        config.progress(f"Output saved to: {saved}")
    else:
        for line in lines:
            print(line)


def _avoid_set(config: RunConfig) -> AvoidSet:
    if config.avoid is None:
        return AvoidSet()
    q = load_avoid_set(read_lines(config.avoid))
    config.progress(f"Loaded {len(q)} forbidden prefixes (weight {q.weight})")
    return q


def _universe(config: RunConfig, measure, bound: int):
    sources = load_universe(read_lines(config.universe)) if config.universe is not None else None
    universe = working_universe(measure, bound, sources=sources, limits=config.limits)
    config.progress(f"Working universe {universe.label}: {len(universe)} strings")
    return universe


def cmd_solve_kc(config: RunConfig) -> int:
    lengths = load_lengths(read_lines(config.lengths))
    base = load_source(config.base) if config.base else EMPTY
    config.progress(f"Solving {len(lengths)} requests above {render(base)}...")
    codes = plain_solve(base, lengths, config.limits)
    _emit(config, [render(code) for code in codes])
    return EXIT_OK


def cmd_layered_solve(config: RunConfig) -> int:
    requests = load_requests(read_lines(config.requests))
    config.progress(f"Solving {len(requests) - 1} layered requests...")
    snapshots = layered_solve(requests, config.limits)
    lines = format_snapshots(snapshots) if config.all_stages else format_snapshot(snapshots[-1])
    _emit(config, lines)
    return EXIT_OK


def cmd_encode(config: RunConfig) -> int:
    measure = load_measure(config.measure)
    x = load_source(config.source)
    bound = len(x) if config.bound is None else config.bound
    if bound > len(x):
        raise ConfigError(f"--bound={bound} is longer than the source ({len(x)} bits)")
    x = x[:bound]
    n = len(x) if config.n is None else config.n
    if n > bound:
        raise ConfigError(f"--n={n} is larger than the working bound {bound}")
    q = _avoid_set(config)
    universe = _universe(config, measure, bound)
    codebook = build_codebook(measure, q, universe, config.limits)
    config.progress(f"Replayed {len(codebook.payloads)} codes (shift {codebook.shift})")
    prefix = encode_with(codebook, x, n)
    if prefix.boundary:
        config.progress(f"Note: the tail minimum for n={n} sits at the working bound {bound}")
    header = {
        "measure": measure.identifier(),
        "shift": str(codebook.shift),
        "bound": str(bound),
        "n": str(n),
        "use": str(prefix.use),
        "avoid-sha256": q.digest(),
        "universe": universe.label,
    }
    _emit(config, format_code_file(CodeFile(prefix.y, header)))
    return EXIT_OK


def _check_avoid(code: CodeFile, q: AvoidSet) -> None:
    recorded = code.header.get("avoid-sha256")
    if recorded is not None and recorded != q.digest():
        raise DecodingError("the avoid set differs from the one the code was written with")


def cmd_decode(config: RunConfig) -> int:
    measure = load_measure(config.measure)
    code = load_code_file(read_lines(config.code))
    q = _avoid_set(config)
    _check_avoid(code, q)
    bound = code.get_int("bound") if config.bound is None else config.bound
    if bound is None:
        raise ConfigError("the code file has no bound; pass --bound")
    n = code.get_int("n") if config.n is None else config.n
    if n is None or n > bound:
        raise ConfigError(f"cannot decode n={n} with working bound {bound}")
    universe = _universe(config, measure, bound)
    recorded = code.header.get("universe")
    if recorded is not None and recorded != universe.label:
        raise DecodingError(f"the code was written over universe {recorded}, not {universe.label}")
    codebook = build_codebook(measure, q, universe, config.limits)
    shift = code.get_int("shift")
    if shift is not None and shift != codebook.shift:
        raise DecodingError(f"code was written with shift {shift}, replay computes {codebook.shift}")
    x = decode_with(codebook, code.y, n)
    _emit(config, [render(x)])
    return EXIT_OK


def cmd_use_table(config: RunConfig) -> int:
    measure = load_measure(config.measure)
    x = load_source(config.source)
    if config.bound is not None:
        x = x[:config.bound]
    table = use_table(measure, x)
    lines = []
    for n in sorted(table):
        use = table[n]
        lines.append(f"{n} {use.value}" + (" boundary" if use.beyond_bound else ""))
    _emit(config, lines)
    return EXIT_OK


def cmd_dynamic_encode(config: RunConfig) -> int:
    run = load_run(read_lines(config.run))
    config.progress(f"Run loaded: {run.report.strings} strings, {run.report.stages} stages, "
                    f"tightest tail at stage {run.report.tightest[0]} on {run.report.tightest[1]} "
                    f"({run.report.tightest[2]})")
    x = load_source(config.source)
    n = len(x) if config.n is None else config.n
    q = _avoid_set(config)
    codebook = build_dynamic_codebook(run, q, config.limits)
    config.progress(f"Universal sequence has {len(codebook.universal.requests) - 1} requests")
    prefix = dynamic_encode_with(codebook, x, n)
    header = {
        "measure": "dynamic",
        "c": str(run.c),
        "bound": str(len(x)),
        "n": str(n),
        "use": str(prefix.use),
        "avoid-sha256": q.digest(),
    }
    _emit(config, format_code_file(CodeFile(prefix.y, header)))
    return EXIT_OK


def cmd_dynamic_decode(config: RunConfig) -> int:
    run = load_run(read_lines(config.run))
    code = load_code_file(read_lines(config.code))
    q = _avoid_set(config)
    _check_avoid(code, q)
    n = code.get_int("n") if config.n is None else config.n
    if n is None:
        raise ConfigError("the code file has no n; pass --n")
    c = code.get_int("c")
    if c is not None and c != run.c:
        raise DecodingError(f"code was written with c={c}, the run file has c={run.c}")
    codebook = build_dynamic_codebook(run, q, config.limits)
    x = decode_stream(codebook.payloads, code.y, n, codebook.longest_code)
    _emit(config, [render(x)])
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    source = load_source(config.source) if config.source is not None else None
    results = run_comparison(
        config.measure,
        config.ns,
        schedule=config.schedule,
        source=source,
        limits=config.limits,
        workers=config.workers,
        verbose=config.verbose,
        json_output=config.json_output,
        csv_output=config.csv_output,
    )
    for line in summary_lines(results):
        print(line)
    return EXIT_VALIDATION if results["summary"]["rows_failed"] else EXIT_OK


def cmd_trace_dump(config: RunConfig) -> int:
    requests = load_requests(read_lines(config.requests))
    state = solve_layered(requests, config.limits)
    lines = []
    for event in state.events:
        lines.append(f"stage {event.stage}: base {render(event.base)} "
                     f"(request {event.base_request}, depth {event.base_depth})")
        touched = [event.base] + [code for _, code in event.added[:-1]]
        for index, code in event.added:
            lines.append(f"  S{index} += {render(code)}")
        for code in touched:
            positions = " ".join(str(p) for p in state.code_trace(code).sorted())
            lines.append(f"  trace {render(code)}: {positions}")
    lines.append("final traces:")
    for code in state.codes():
        positions = " ".join(str(p) for p in state.code_trace(code).sorted())
        lines.append(f"  S{state.owner[code]} {render(code)}: {positions}")
    _emit(config, lines)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "solve-kc": cmd_solve_kc,
    "layered-solve": cmd_layered_solve,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "use-table": cmd_use_table,
    "dynamic-encode": cmd_dynamic_encode,
    "dynamic-decode": cmd_dynamic_decode,
    "compare": cmd_compare,
    "trace-dump": cmd_trace_dump,
}


def _ns(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="layeredkc", description="Layered Kraft-Chaitin code allocation and stream coding.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--verbose", action="store_true", help="Print progress to stderr.")
        p.add_argument(
            "--max-request-length",
            type=int,
            default=None,
            help=f"Longest code any solver may allocate (default: {DEFAULT_MAX_REQUEST_LENGTH}, 8192 for compare)."
        )
        p.add_argument("--out", default=None, help="Write the result to this file instead of stdout.")

    p = sub.add_parser("solve-kc", help="Greedy prefix-free codes for a list of lengths.")
    p.add_argument("--lengths", required=True, help="File with one length per line.")
    p.add_argument("--base", default="", help="Solve above this bitstring or bit file (default: the empty string).")
    common(p)

    p = sub.add_parser("layered-solve", help="Greedy solution of a layered request file.")
    p.add_argument("--requests", required=True, help="Request file, one '<pointer> <length> [<payload>]' per line.")
    p.add_argument("--all-stages", action="store_true", help="Dump the sets after every stage, not just the last.")
    common(p)

    for name, text in (("encode", "Encode a source prefix."), ("use-table", "Print n -> oracle-use.")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--measure", default=LENGTH_PLUS_LOG,
                       help=f"Builtin measure name or measure table file (default: {LENGTH_PLUS_LOG}).")
        p.add_argument("--source", required=True, help="Source bits, inline or as a file.")
        p.add_argument("--bound", type=int, default=None, help="Working bound N (default: the source length).")
        if name == "encode":
            p.add_argument("--avoid", default=None, help="Avoid-set file (default: no forbidden prefixes).")
            p.add_argument("--n", type=int, default=None, help="Target prefix length (default: N).")
            p.add_argument("--universe", default=None, help="Universe file; its prefix closure is enumerated.")
        common(p)

    p = sub.add_parser("decode", help="Decode a code file.")
    p.add_argument("--measure", default=LENGTH_PLUS_LOG,
                   help=f"Builtin measure name or measure table file (default: {LENGTH_PLUS_LOG}).")
    p.add_argument("--code", required=True, help="Code file written by encode.")
    p.add_argument("--avoid", default=None, help="Avoid-set file (default: no forbidden prefixes).")
    p.add_argument("--n", type=int, default=None, help="Target prefix length (default: from the code file).")
    p.add_argument("--bound", type=int, default=None, help="Working bound N (default: from the code file).")
    p.add_argument("--universe", default=None, help="Universe file used by the encoder.")
    common(p)

    p = sub.add_parser("dynamic-encode", help="Encode against a scripted approximation run.")
    p.add_argument("--run", required=True, help="Run file.")
    p.add_argument("--source", required=True, help="Source bits, inline or as a file.")
    p.add_argument("--avoid", default=None, help="Avoid-set file (default: no forbidden prefixes).")
    p.add_argument("--n", type=int, default=None, help="Target prefix length (default: the source length).")
    common(p)

    p = sub.add_parser("dynamic-decode", help="Decode a code file written by dynamic-encode.")
    p.add_argument("--run", required=True, help="Run file.")
    p.add_argument("--code", required=True, help="Code file.")
    p.add_argument("--avoid", default=None, help="Avoid-set file (default: no forbidden prefixes).")
    p.add_argument("--n", type=int, default=None, help="Target prefix length (default: from the code file).")
    common(p)

    p = sub.add_parser("compare", help="Overhead of the block baseline against the layered coder.")
    p.add_argument("--measure", default=LENGTH_PLUS_LOG,
                   help=f"Builtin measure name or measure table file (default: {LENGTH_PLUS_LOG}).")
    p.add_argument("--ns", type=_ns, default=[256, 1024, 4096],
                   help="Comma-separated lengths to report (default: 256,1024,4096).")
    p.add_argument("--schedule", choices=schedule_names(), default="linear",
                   help="Block length schedule of the baseline (default: linear).")
    p.add_argument("--source", default=None,
                   help="Source bits or file (default: alternating bits covering every block).")
    p.add_argument("--workers", type=int, default=1, help="Worker processes, one row per task (default: 1).")
    p.add_argument("--json", dest="json_output", default=None, help="Write the JSON summary to this file.")
    p.add_argument("--csv", dest="csv_output", default=None, help="Write the table as CSV to this file.")
    common(p)

    p = sub.add_parser("trace-dump", help="Per-stage bases, codes and traces of a layered solve.")
    p.add_argument("--requests", required=True, help="Request file.")
    common(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        config = RunConfig.from_args(args).validate()
        return COMMANDS[config.command](config)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DecodingError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DECODE
    except LayeredKCError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
