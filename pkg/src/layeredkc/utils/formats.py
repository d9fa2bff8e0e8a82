"""
Loaders and writers for the plain-text formats used by the command line.

Every loader takes an iterable of lines so tests can pass lists; the
`read_lines` helper turns a path into lines. Blank lines are skipped and
`#` starts a comment line, except in code files where `# key=value` lines
form the header.
"""
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from layeredkc.avoidance import AvoidSet
from layeredkc.bitcore import EMPTY_TOKEN, BitString, bits, render
from layeredkc.dynamic_coder import ApproxRun
from layeredkc.errors import FormatError
from layeredkc.layered_kc import LayeredRequest, Snapshot
from layeredkc.measures import MeasureSpec, builtin_measure, table_measure

PathLike = Union[str, Path]

CODE_HEADER_KEYS = ("measure", "shift", "c", "bound", "n", "use", "avoid-sha256", "universe")


def read_lines(path: PathLike) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        return f.read().splitlines()


def write_lines(path: PathLike, lines: Iterable[str]) -> str:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
    return str(path)


def _content(lines: Iterable[str]) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line


def _int(token: str, number: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"{what} must be an integer, got {token!r}", line=number) from None


def _bits(token: str, number: int) -> BitString:
    try:
        return bits(token)
    except FormatError as exc:
        raise FormatError(str(exc), line=number) from None


# lengths: one positive integer per line

def load_lengths(lines: Iterable[str]) -> List[int]:
    return [_int(line, number, "length") for number, line in _content(lines)]


def format_lengths(lengths: Iterable[int]) -> List[str]:
    return [str(length) for length in lengths]


# requests: "<pointer> <length> [<payload>]", first line "* 0"

def load_requests(lines: Iterable[str]) -> List[LayeredRequest]:
    requests = []
    for number, line in _content(lines):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise FormatError(f"expected '<pointer> <length> [<payload>]', got {line!r}", line=number)
        if not requests:
            if parts[:2] != ["*", "0"] or len(parts) == 3 and parts[2] != EMPTY_TOKEN:
                raise FormatError("the first request must be '* 0'", line=number)
            requests.append(LayeredRequest(None, 0))
            continue
        if parts[0] == "*":
            raise FormatError("only the first request may have pointer *", line=number)
        pointer = _int(parts[0], number, "pointer")
        length = _int(parts[1], number, "length")
        payload = _bits(parts[2], number) if len(parts) == 3 else bits("")
        requests.append(LayeredRequest(pointer, length, payload))
    if not requests:
        raise FormatError("request file is empty")
    return requests


def format_requests(requests: Sequence[LayeredRequest]) -> List[str]:
    lines = []
    for r in requests:
        pointer = "*" if r.pointer is None else str(r.pointer)
        line = f"{pointer} {r.length}"
        if len(r.payload):
            line += f" {render(r.payload)}"
        lines.append(line)
    return lines


# snapshot dumps: "# stage <k>" followed by "S<i>: code code ..."

def format_snapshots(snapshots: Sequence[Snapshot]) -> List[str]:
    lines = []
    for stage, snapshot in enumerate(snapshots):
        lines.append(f"# stage {stage}")
        for i, codes in enumerate(snapshot):
            lines.append(f"S{i}: " + " ".join(render(c) for c in codes))
    return lines


def load_snapshots(lines: Iterable[str]) -> List[Snapshot]:
    snapshots: List[List[Tuple[BitString, ...]]] = []
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# stage"):
            snapshots.append([])
            continue
        if not snapshots:
            raise FormatError("snapshot line before the first '# stage' marker", line=number)
        label, _, rest = line.partition(":")
        if not label.startswith("S") or _int(label[1:], number, "set index") != len(snapshots[-1]):
            raise FormatError(f"expected S{len(snapshots[-1])}, got {label!r}", line=number)
        snapshots[-1].append(tuple(_bits(token, number) for token in rest.split()))
    return [tuple(s) for s in snapshots]


# avoid sets: one bitstring per line, enumeration order = line order

def load_avoid_set(lines: Iterable[str]) -> AvoidSet:
    members = [_bits(line, number) for number, line in _content(lines)]
    return AvoidSet(tuple(members))


def format_avoid_set(q: AvoidSet) -> List[str]:
    return [render(m) for m in q]


# measure tables: "<bits> <int>"

def load_measure_table(lines: Iterable[str], name: str = "table") -> MeasureSpec:
    table: Dict[BitString, int] = {}
    for number, line in _content(lines):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"expected '<bits> <int>', got {line!r}", line=number)
        s = _bits(parts[0], number)
        if s in table:
            raise FormatError(f"{parts[0]} listed twice", line=number)
        table[s] = _int(parts[1], number, "measure value")
    return table_measure(table, name=name)


def format_measure_table(table: Dict[BitString, int]) -> List[str]:
    return [f"{render(s)} {value}" for s, value in sorted(table.items(), key=lambda kv: (len(kv[0]), kv[0].to01()))]


def load_measure(ref: str) -> MeasureSpec:
    """
    A builtin measure name, or the path of a measure table file.
    """
    if os.path.exists(ref):
        return load_measure_table(read_lines(ref), name=f"table:{Path(ref).name}")
    return builtin_measure(ref)


# universe files: one source per line

def load_universe(lines: Iterable[str]) -> List[BitString]:
    return [_bits(line, number) for number, line in _content(lines)]


def load_source(ref: str) -> BitString:
    """
    Inline bits, or the path of a file holding them on its first content line.
    """
    if os.path.exists(ref):
        content = list(_content(read_lines(ref)))
        if not content:
            raise FormatError(f"source file {ref} is empty")
        number, line = content[0]
        return _bits(line, number)
    return bits(ref)


# code files: "# key=value" header lines, then one line of bits

@dataclass
class CodeFile:
    y: BitString
    header: Dict[str, str] = field(default_factory=dict)

    def get_int(self, key: str) -> Optional[int]:
        value = self.header.get(key)
        if value is None:
            return None
        try:
            return int(value)
        except ValueError:
            raise FormatError(f"header {key} must be an integer, got {value!r}") from None


def format_code_file(code: CodeFile) -> List[str]:
    lines = [f"# {key}={code.header[key]}" for key in CODE_HEADER_KEYS if key in code.header]
    lines.extend(f"# {key}={value}" for key, value in code.header.items() if key not in CODE_HEADER_KEYS)
    lines.append(render(code.y))
    return lines


def load_code_file(lines: Iterable[str]) -> CodeFile:
    header: Dict[str, str] = {}
    body: Optional[BitString] = None
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise FormatError(f"header lines are '# key=value', got {line!r}", line=number)
            header[key.strip()] = value.strip()
            continue
        if body is not None:
            raise FormatError("code file has more than one body line", line=number)
        body = _bits(line, number)
    if body is None:
        raise FormatError("code file has no body line")
    return CodeFile(body, header)


# approximation runs: "c=<int>", "universe-maxlen=<int>", "<bits> <int>", "@<stage> <bits> <int>"

@dataclass
class RunFile:
    initial: Dict[BitString, int]
    updates: List[Tuple[int, BitString, int]]
    c: int = 1
    universe_maxlen: Optional[int] = None


def load_run_file(lines: Iterable[str]) -> RunFile:
    run = RunFile({}, [])
    for number, line in _content(lines):
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key == "c":
                run.c = _int(value.strip(), number, "c")
            elif key == "universe-maxlen":
                run.universe_maxlen = _int(value.strip(), number, "universe-maxlen")
            else:
                raise FormatError(f"unknown run setting {key!r}", line=number)
            continue
        parts = line.split()
        if parts[0].startswith("@"):
            if len(parts) != 3:
                raise FormatError(f"expected '@<stage> <bits> <int>', got {line!r}", line=number)
            stage = _int(parts[0][1:], number, "stage")
            run.updates.append((stage, _bits(parts[1], number), _int(parts[2], number, "value")))
            continue
        if len(parts) != 2:
            raise FormatError(f"expected '<bits> <int>', got {line!r}", line=number)
        s = _bits(parts[0], number)
        if s in run.initial:
            raise FormatError(f"{parts[0]} has two initial values", line=number)
        run.initial[s] = _int(parts[1], number, "value")
    return run


def format_run_file(run: RunFile) -> List[str]:
    lines = [f"c={run.c}"]
    if run.universe_maxlen is not None:
        lines.append(f"universe-maxlen={run.universe_maxlen}")
    for s, value in sorted(run.initial.items(), key=lambda kv: (len(kv[0]), kv[0].to01())):
        lines.append(f"{render(s)} {value}")
    for stage, s, value in run.updates:
        lines.append(f"@{stage} {render(s)} {value}")
    return lines


def load_run(lines: Iterable[str]) -> ApproxRun:
    """
    Parse a run file and build the run; the tail inequality is verified on load.
    """
    spec = load_run_file(lines)
    return ApproxRun(spec.initial, spec.updates, c=spec.c, universe_maxlen=spec.universe_maxlen)
