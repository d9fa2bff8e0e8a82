import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from bitarray import bitarray

from layeredkc.bitcore import DyadicWeight, render


def convert_to_serializable(obj: Any) -> Any:
    """
    Recursively turn sets, tuples, bitstrings and weights into JSON-friendly values.
    """
    if isinstance(obj, (set, frozenset)):
        return sorted(convert_to_serializable(item) for item in obj)
    elif isinstance(obj, dict):
        return {str(key): convert_to_serializable(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_to_serializable(item) for item in obj]
    elif isinstance(obj, bitarray):
        return render(obj)
    elif isinstance(obj, DyadicWeight):
        return str(obj)
    else:
        return obj


def save_json_report(data: Dict, output_file: Union[str, Path]) -> Optional[str]:
    """
    Write a report as indented JSON. Returns the path written, or None on failure.
    """
    output_file = Path(output_file)
    try:
        output_file.parent.mkdir(exist_ok=True, parents=True)
        with open(output_file, 'w', encoding='utf-8') as f:
            json.dump(convert_to_serializable(data), f, indent=2, ensure_ascii=False)
        return str(output_file)
    except OSError as e:
        print(f"Error saving JSON report {output_file}: {e}", file=sys.stderr)
        return None


def save_csv_report(rows: Sequence[Dict[str, Any]], columns: Sequence[str], output_file: Union[str, Path]) -> Optional[str]:
    output_file = Path(output_file)
    try:
        with open(output_file, 'w', encoding='utf-8', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        return str(output_file)
    except OSError as e:
        print(f"Error saving CSV report {output_file}: {e}", file=sys.stderr)
        return None


def format_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> List[str]:
    """
    Right-aligned text table with a header line.
    """
    cells = [[str(c) for c in columns]] + [[str(row.get(c, "")) for c in columns] for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(columns))]
    return ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in cells]
