"""Interference graphs, schedules and brute-force independent-set oracles.

Links are numbered ``0..n-1``. A schedule is a 0/1 vector over links that
must be an independent set of the interference graph. Enumeration based
routines are exact and meant for desk-scale graphs (``n <= 24``).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

ENUMERATION_CAP = 24
TIE_TOL = 1e-12


class NotIndependentError(ValueError):
    """Raised when a bit vector violates an interference constraint."""


class EnumerationCapError(ValueError):
    """Raised when a graph is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class InterferenceGraph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one link, got n={self.n}")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on link {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "InterferenceGraph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @functools.cached_property
    def sorted_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    @functools.cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.sorted_edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(v)) for v in nbrs)

    @functools.cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1
        adj.setflags(write=False)
        return adj

    @functools.cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << j for j in nb) for nb in self.neighbors)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            for j in self.neighbors[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    def schedule(self, bits) -> "Schedule":
        """Validated constructor for a schedule on this graph."""
        arr = _as_bits(self, bits)
        if not _independent(self, arr):
            raise NotIndependentError(f"{arr.tolist()} is not an independent set")
        return Schedule(tuple(int(b) for b in arr))

    def schedule_of(self, members: Iterable[int]) -> "Schedule":
        bits = np.zeros(self.n, dtype=np.int64)
        bits[list(members)] = 1
        return self.schedule(bits)

    # graph file format: first non-comment line is n, then "i j" per edge
    def dumps(self) -> str:
        lines = [str(self.n)] + [f"{i} {j}" for i, j in self.sorted_edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "InterferenceGraph":
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line.split())
        if not rows:
            raise ValueError("graph file is empty")
        if len(rows[0]) != 1:
            raise ValueError("first line of a graph file must hold the link count")
        n = int(rows[0][0])
        edges = []
        for k, row in enumerate(rows[1:], start=2):
            if len(row) != 2:
                raise ValueError(f"malformed edge line {k}: {' '.join(row)!r}")
            edges.append((int(row[0]), int(row[1])))
        return cls.from_edges(n, edges)

    @classmethod
    def load(cls, path) -> "InterferenceGraph":
        return cls.loads(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


@dataclass(frozen=True)
class Schedule:
    """An independent set stored as a tuple of 0/1 bits.

    Build these through :meth:`InterferenceGraph.schedule` so the
    independence property is checked.
    """

    bits: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @property
    def size(self) -> int:
        return sum(self.bits)

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int64)

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    @property
    def code(self) -> int:
        """Integer value with link 0 as the most significant bit."""
        return int(self.bitstring, 2) if self.bits else 0

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.members)) + "}"


def _as_bits(g: InterferenceGraph, bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.shape != (g.n,):
        raise ValueError(f"expected a length-{g.n} vector, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("schedule entries must be 0 or 1")
    return arr.astype(np.int64)


def _independent(g: InterferenceGraph, arr: np.ndarray) -> bool:
    return all(not (arr[i] and arr[j]) for i, j in g.edges)


def build_named_graph(kind: str, size: int) -> InterferenceGraph:
    """Star (center 0), ring (cycle) or path (chain) on ``size`` links."""
    if kind == "star":
        if size < 1:
            raise ValueError("star needs size >= 1")
        return InterferenceGraph.from_edges(size, [(0, k) for k in range(1, size)])
    if kind == "ring":
        if size < 3:
            raise ValueError("ring needs size >= 3")
        return InterferenceGraph.from_edges(size, [(k, (k + 1) % size) for k in range(size)])
    if kind == "path":
        if size < 1:
            raise ValueError("path needs size >= 1")
        return InterferenceGraph.from_edges(size, [(k, k + 1) for k in range(size - 1)])
    raise ValueError(f"unknown graph kind {kind!r} (expected star, ring or path)")


def parse_graph_spec(spec: str) -> InterferenceGraph:
    """``"star:7"``-style name, or a path to a graph file."""
    if ":" in spec:
        kind, _, size = spec.partition(":")
        if kind in ("star", "ring", "path"):
            return build_named_graph(kind, int(size))
    path = Path(spec)
    if path.is_file():
        return InterferenceGraph.load(path)
    raise ValueError(f"cannot interpret graph spec {spec!r}")


def is_independent(g: InterferenceGraph, bits) -> bool:
    return _independent(g, _as_bits(g, bits))


def _enumerate_codes(g: InterferenceGraph) -> list[int]:
    # bitmask backtracking; bit k of a mask is link k
    masks = g.neighbor_masks
    out = []

    def extend(k: int, chosen: int, blocked: int) -> None:
        if k == g.n:
            out.append(chosen)
            return
        extend(k + 1, chosen, blocked)
        if not (blocked >> k) & 1:
            extend(k + 1, chosen | (1 << k), blocked | masks[k])

    extend(0, 0, 0)
    return out


@functools.lru_cache(maxsize=64)
def independent_set_matrix(g: InterferenceGraph, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All independent sets as rows of an ``(m, n)`` 0/1 array.

    Rows are sorted as binary numbers with link 0 most significant, so the
    empty set comes first and the last row of any tie is the
    lexicographically largest.
    """
    if g.n > cap:
        raise EnumerationCapError(f"n={g.n} exceeds enumeration cap {cap}")
    masks = np.array(_enumerate_codes(g), dtype=np.int64)
    rows = ((masks[:, None] >> np.arange(g.n)) & 1).astype(np.int64)
    weights = 1 << np.arange(g.n - 1, -1, -1, dtype=np.int64)
    order = np.argsort(rows @ weights, kind="stable")
    rows = rows[order]
    rows.setflags(write=False)
    return rows


def enumerate_independent_sets(g: InterferenceGraph, cap: int = ENUMERATION_CAP) -> list[Schedule]:
    return [Schedule(tuple(int(b) for b in row)) for row in independent_set_matrix(g, cap)]


def argmax_row(values: np.ndarray) -> int:
    """Index of the maximum with ties going to the last (largest) row."""
    best = values.max()
    tol = TIE_TOL * max(1.0, abs(best))
    return int(np.flatnonzero(values >= best - tol)[-1])


def max_weight_independent_set(g: InterferenceGraph, weights) -> Schedule:
    """Exact max-weight independent set by enumeration.

    Ties go to the lexicographically largest bit vector read from link 0.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (g.n,):
        raise ValueError(f"expected {g.n} weights, got shape {w.shape}")
    sets = independent_set_matrix(g)
    row = sets[argmax_row(sets @ w)]
    return Schedule(tuple(int(b) for b in row))


def max_uniform_rate(g: InterferenceGraph) -> float:
    """Largest ``u`` with ``u * 1`` in the convex hull of all schedules."""
    sets = independent_set_matrix(g).astype(float)
    m = sets.shape[0]
    # variables: x (m time fractions), u; maximize u
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((g.n + 1, m + 1))
    a_eq[: g.n, :m] = sets.T
    a_eq[: g.n, -1] = -1.0
    a_eq[g.n, :m] = 1.0
    b_eq = np.zeros(g.n + 1)
    b_eq[g.n] = 1.0
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (m + 1), method="highs")
    if res.status != 0:
        raise RuntimeError(f"uniform-rate LP failed: {res.message}")
    return float(res.x[-1])
