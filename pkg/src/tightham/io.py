"""Text formats ``.h3`` (hypergraphs), ``.g2`` (graphs) and cycle files."""

from __future__ import annotations

from pathlib import Path

from .hypergraph import Graph, Hypergraph3


class FormatError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _decode(data: bytes | str) -> list[str]:
    if isinstance(data, bytes):
        try:
            data = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatError("input is not ASCII") from exc
    if "\r" in data:
        raise FormatError("CR characters are not allowed (LF line endings only)")
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse(data: bytes | str, tag: str, arity: int) -> tuple[int, list[tuple[int, ...]]]:
    lines = _decode(data)
    if not lines:
        raise FormatError("empty input", 1)
    head = lines[0].split()
    if len(head) != 3 or head[0] != tag:
        raise FormatError(f"malformed header, expected '{tag} <n> <m>'", 1)
    try:
        n, m = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError("header counts must be integers", 1) from None
    if n < 0 or m < 0:
        raise FormatError("header counts must be non-negative", 1)
    if len(lines) - 1 != m:
        raise FormatError(f"header declares {m} records but found {len(lines) - 1}", 1)
    seen = set()
    out = []
    for i, raw in enumerate(lines[1:], start=2):
        parts = raw.split(" ")
        if len(parts) != arity:
            raise FormatError(f"expected {arity} space-separated vertices", i)
        try:
            rec = tuple(int(p) for p in parts)
        except ValueError:
            raise FormatError("non-integer vertex", i) from None
        if any(v < 0 or v >= n for v in rec):
            raise FormatError(f"vertex out of range for n={n}", i)
        if any(rec[j] >= rec[j + 1] for j in range(arity - 1)):
            kind = "triple" if arity == 3 else "pair"
            raise FormatError(f"unsorted {kind} at line {i}", i)
        if rec in seen:
            raise FormatError(f"duplicate record {rec}", i)
        seen.add(rec)
        out.append(rec)
    return n, out


def parse_h3(data: bytes | str) -> Hypergraph3:
    n, triples = _parse(data, "h3", 3)
    return Hypergraph3(n, triples)


def serialize_h3(H: Hypergraph3) -> bytes:
    rows = [f"h3 {H.n} {H.m}"] + [f"{a} {b} {c}" for a, b, c in sorted(H.edges)]
    return ("\n".join(rows) + "\n").encode("ascii")


def parse_g2(data: bytes | str) -> Graph:
    n, pairs = _parse(data, "g2", 2)
    return Graph.from_edges(n, pairs, vertices=range(n))


def serialize_g2(G: Graph) -> bytes:
    es = sorted(G.edges())
    rows = [f"g2 {G.n} {len(es)}"] + [f"{a} {b}" for a, b in es]
    return ("\n".join(rows) + "\n").encode("ascii")


def read_h3(path: str | Path) -> Hypergraph3:
    return parse_h3(Path(path).read_bytes())


def write_h3(H: Hypergraph3, path: str | Path) -> None:
    Path(path).write_bytes(serialize_h3(H))


def parse_cycle(data: bytes | str) -> list[int]:
    """A cycle file is one line of space-separated vertices."""
    lines = [ln for ln in _decode(data) if ln.strip()]
    if len(lines) != 1:
        raise FormatError("cycle file must contain exactly one non-empty line")
    try:
        return [int(t) for t in lines[0].split()]
    except ValueError:
        raise FormatError("non-integer vertex in cycle file", 1) from None


def serialize_cycle(seq) -> bytes:
    return (" ".join(str(v) for v in seq) + "\n").encode("ascii")
