"""Text and CSV formats. Every writer goes through a temp file and an atomic rename."""

from __future__ import annotations

import csv
import io as _io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import Graph, GraphError

TRAJECTORY_COLUMNS = ("t", "max_regret", "sigma2_Pt", "lambda_n1_Lt", "edges_added_cumulative")
THEORY_COLUMNS = ("delta_star", "beta_star", "net_bound", "thm2_bound_at_T", "prop3_scale")
THEORY_CHECKPOINT_COLUMNS = ("t", "delta_star", "thm2_bound", "empirical_regret")
TRACE_COLUMNS = ("round", "agent", "quantity", "value")
SWEEP_COLUMNS = (
    "axis", "regret_mean", "regret_stderr", "thm2_bound", "delta_star", "edges_added", "cost_total",
    "connectivity_distance", "conv_time_mean", "prop3_scale",
)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row width does not match the header")
        w.writerow([fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# graph files: "n m", then m lines "i j" (1-based), optional "positions" + n lines "x y"


def format_graph(graph: Graph, edges: Optional[Sequence] = None, sort: bool = True) -> str:
    es = list(graph.edges if edges is None else edges)
    if sort:
        es = sorted((min(a, b), max(a, b)) for a, b in es)
    lines = [f"{graph.n} {len(es)}"]
    lines += [f"{i + 1} {j + 1}" for i, j in es]
    if graph.positions is not None:
        lines.append("positions")
        lines += [f"{x:.17g} {y:.17g}" for x, y in graph.positions]
    return "\n".join(lines) + "\n"


def write_graph(path, graph: Graph) -> None:
    atomic_write_text(path, format_graph(graph))


def parse_graph(text: str) -> Graph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise GraphError("empty graph file")
    try:
        n, m = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise GraphError(f"bad header {lines[0]!r}; expected 'n m'") from exc
    if len(lines) < 1 + m:
        raise GraphError(f"expected {m} edge lines")
    edges = []
    for ln in lines[1 : 1 + m]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"bad edge line {ln!r}")
        i, j = int(parts[0]) - 1, int(parts[1]) - 1
        edges.append((i, j))
    rest = lines[1 + m :]
    positions = None
    if rest:
        if rest[0] != "positions" or len(rest) != n + 1:
            raise GraphError("trailing content must be 'positions' followed by n lines")
        positions = np.array([[float(v) for v in ln.split()] for ln in rest[1:]])
    return Graph(n, edges, positions)


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_selection(path, result, K: int, gamma: float, mode: str, k: Optional[int]) -> None:
    """Header ``K gamma mode k`` (``k`` is ``-`` in C1 mode), then the relaxed and binary vectors."""
    head = f"{K} {gamma:.17g} {mode} {'-' if k is None else int(k)}"
    wr = " ".join(f"{v:.17g}" for v in result.w_relaxed)
    wb = " ".join(str(int(v)) for v in result.w_binary)
    atomic_write_text(path, f"{head}\n{wr}\n{wb}\n")


def read_selection(path):
    lines = Path(path).read_text().split("\n")
    K, gamma, mode, k = lines[0].split()
    K = int(K)
    wr = np.array([float(v) for v in lines[1].split()]) if K else np.zeros(0)
    wb = np.array([int(v) for v in lines[2].split()]) if K else np.zeros(0, dtype=int)
    if wr.size != K or wb.size != K:
        raise ValueError("selection vectors do not match K")
    return {"K": K, "gamma": float(gamma), "mode": mode, "k": None if k == "-" else int(k),
            "w_relaxed": wr, "w_binary": wb}


def write_schedule(path, n: int, additions: Sequence) -> None:
    """Header ``n count``, then ``t i j`` per addition in time order (1-based nodes)."""
    lines = [f"{n} {len(additions)}"] + [f"{t} {e[0] + 1} {e[1] + 1}" for t, e in additions]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_schedule(path):
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    n, count = int(lines[0][0]), int(lines[0][1])
    adds = [(int(t), (int(i) - 1, int(j) - 1)) for t, i, j in lines[1 : 1 + count]]
    return n, adds


def write_trajectory(path, traj) -> None:
    cols = traj.columns()
    write_csv(path, TRAJECTORY_COLUMNS, zip(*(cols[c] for c in TRAJECTORY_COLUMNS)))


def write_trace(path, stats) -> None:
    write_csv(path, TRACE_COLUMNS, stats.trace)
