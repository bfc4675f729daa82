"""
Writes sweep results as commented CSV and verification results as a Markdown report

The Markdown report renders on GitHub, including the Mermaid pie chart, so it can be used as a
job summary.
"""
import csv
import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, List, Sequence, TextIO, Tuple

import workstats

if TYPE_CHECKING:
    from workstats.verify import CheckResult


@dataclass
class Table:
    kind: str
    params: dict[str, Any]
    header: list[str]
    rows: list[Sequence] = field(default_factory=list)
    # Extra "# ..." lines written after the params line
    notes: list[str] = field(default_factory=list)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def write_csv(out: TextIO, table: Table):
    """
    Three metadata lines (version, kind, sorted JSON params), any notes, then the header and the rows.
    Floats use 12 significant digits.
    """
    out.write(f"# workstats {workstats.__version__}\n")
    out.write(f"# kind: {table.kind}\n")
    out.write(f"# params: {json.dumps(table.params, sort_keys=True)}\n")
    for note in table.notes:
        out.write(f"# {note}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_value(value) for value in row])


def read_csv(inp: TextIO) -> Table:
    """Reads back a file written by :func:`write_csv`; values stay strings."""
    kind, params, notes = "", {}, []
    lines = []
    for line in inp:
        if line.startswith("# kind: "):
            kind = line[len("# kind: "):].strip()
        elif line.startswith("# params: "):
            params = json.loads(line[len("# params: "):])
        elif line.startswith("# workstats "):
            continue
        elif line.startswith("# "):
            notes.append(line[2:].rstrip("\n"))
        else:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, [])
    return Table(kind=kind, params=params, header=header, rows=list(reader), notes=notes)


class MarkdownWriter:
    out: TextIO

    def __init__(self, out):
        self.out = out

    def write_mermaid_pie(self, title: str, data: List[Tuple[str, int]]):
        lines = [
                    "```mermaid",
                    "pie showData",
                    f"\ttitle {title}"
                ] + [f"\t\"{name}\": {count}" for name, count in data] + [
                    "```"
                ]
        self.out.write("\n".join(lines) + "\n\n")

    def write_header(self, title: str, level: int):
        self.out.write("#" * level + " " + title + "\n\n")

    def write_h1(self, title: str):
        self.write_header(title, 1)

    def write_h2(self, title: str):
        self.write_header(title, 2)

    def write_p(self, text):
        self.out.write(text + "\n\n")

    def write_table(self, header: List[str], rows: List[List[str]]):
        self.out.write("| " + " | ".join(header) + " |\n")
        self.out.write("|" + "|".join(["---"] * len(header)) + "|\n")
        for row in rows:
            self.out.write("| " + " | ".join(row) + " |\n")
        self.out.write("\n")

    def write_list(self, items: List[str]):
        for item in items:
            self.out.write("  * " + item + "\n")
        self.out.write("\n")


def write_verify_report(out: TextIO, results: Sequence["CheckResult"]):
    passed = [r for r in results if r.passed]
    failed = [r for r in results if not r.passed]

    writer = MarkdownWriter(out)
    writer.write_h1("Verification report")
    writer.write_p(f"workstats {workstats.__version__} ran {len(results)} checks.")
    writer.write_mermaid_pie("Checks", [
        ("Passed", len(passed)),
        ("Failed", len(failed))
    ])
    writer.write_h2("Results")
    writer.write_table(["Check", "Value", "Bound", "Result"],
                       [[r.name, format(r.value, ".3e"), f"{r.relation} {r.bound:.1e}",
                         "pass" if r.passed else "**FAIL**"] for r in results])
    if failed:
        writer.write_p("Failed checks:")
        writer.write_list([f"{r.name}: {r.detail}" if r.detail else r.name for r in failed])

