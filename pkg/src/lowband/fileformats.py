"""Plain-text instance and edge-list files.

Instance layout::

    # comments anywhere
    n d semiring
    A
    row col value
    B
    row col value
    X
    row col
    PATTERN A        (optional: supported entries whose value is zero)
    row col
    PATTERN B
    row col

Any run of whitespace separates fields.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .core import SparsePattern, TriInstance
from .semiring import get_semiring

_SECTIONS = {"A": "A", "B": "B", "X": "X", "PATTERN A": "PA", "PATTERN B": "PB"}


def _lines(text: str) -> Iterable[tuple[int, str]]:
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def parse_instance(text: str) -> TriInstance:
    it = iter(_lines(text))
    try:
        no, header = next(it)
    except StopIteration:
        raise ValueError("empty instance file") from None
    parts = header.split()
    if len(parts) != 3:
        raise ValueError(f"line {no}: header must be 'n d semiring'")
    n, d = int(parts[0]), int(parts[1])
    sr = get_semiring(parts[2])
    entries: dict[str, dict] = {k: {} for k in _SECTIONS.values()}
    section = None
    for no, line in it:
        key = " ".join(line.split()).upper()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            continue
        if section is None:
            raise ValueError(f"line {no}: entry before any section")
        f = line.split()
        want = 3 if section in ("A", "B") else 2
        if len(f) != want:
            raise ValueError(f"line {no}: expected {want} fields in section {section}, got {len(f)}")
        r, c = int(f[0]), int(f[1])
        entries[section][(r, c)] = sr.parse(f[2]) if want == 3 else None
    pat_a = SparsePattern.from_entries(n, set(entries["A"]) | set(entries["PA"]))
    pat_b = SparsePattern.from_entries(n, set(entries["B"]) | set(entries["PB"]))
    pat_x = SparsePattern.from_entries(n, entries["X"])
    return TriInstance(n, d, sr, pat_a, pat_b, pat_x, entries["A"], entries["B"])


def read_instance(path: str | Path) -> TriInstance:
    return parse_instance(Path(path).read_text())


def format_instance(inst: TriInstance) -> str:
    sr = inst.semiring
    out = [f"{inst.n} {inst.d} {sr.name}"]
    zeros = {}
    for name, pat, get in (("A", inst.pat_a, inst.a), ("B", inst.pat_b, inst.b)):
        out.append(name)
        zeros[name] = []
        for r, c in pat.entries():
            v = get(r, c)
            if v == sr.zero:
                zeros[name].append((r, c))
            else:
                out.append(f"{r} {c} {sr.format(v)}")
    out.append("X")
    out.extend(f"{r} {c}" for r, c in inst.pat_x.entries())
    for name in ("A", "B"):
        if zeros[name]:
            out.append(f"PATTERN {name}")
            out.extend(f"{r} {c}" for r, c in zeros[name])
    return "\n".join(out) + "\n"


def write_instance(inst: TriInstance, path: str | Path) -> None:
    Path(path).write_text(format_instance(inst))


def format_product(X: dict, semiring) -> str:
    sr = get_semiring(semiring)
    return "".join(f"{i} {k} {sr.format(v)}\n" for (i, k), v in sorted(X.items()))


def read_edges(path: str | Path) -> list[tuple[int, int]]:
    """``u v`` per line, 0-indexed; duplicate and reversed edges collapse."""
    edges = set()
    for no, line in _lines(Path(path).read_text()):
        f = line.split()
        if len(f) != 2:
            raise ValueError(f"{path}:{no}: expected 'u v'")
        u, v = int(f[0]), int(f[1])
        if u == v:
            raise ValueError(f"{path}:{no}: self-loop {u}")
        edges.add((min(u, v), max(u, v)))
    return sorted(edges)


def write_edges(edges: Iterable[tuple[int, int]], path: str | Path) -> None:
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in sorted(edges)))
