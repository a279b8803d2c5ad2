"""Pairwise gossip averaging over random maximal matchings."""

from __future__ import annotations

import numpy as np
from numba import njit

from .topology import InterferenceGraph


def random_maximal_matching(g: InterferenceGraph, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Greedy matching over a uniformly shuffled edge list.

    The shuffle sorts one uniform key per edge, which is the same stream
    :func:`gossip_rounds` consumes, so both give identical matchings.
    """
    edges = g.sorted_edges
    used = [False] * g.n
    matching = []
    if not edges:
        return matching
    for k in np.argsort(rng.random(len(edges))):
        i, j = edges[k]
        if not used[i] and not used[j]:
            used[i] = used[j] = True
            matching.append((i, j))
    return matching


def is_maximal_matching(g: InterferenceGraph, matching) -> bool:
    used = set()
    for i, j in matching:
        if i in used or j in used or (min(i, j), max(i, j)) not in g.edges:
            return False
        used.update((i, j))
    return all(i in used or j in used for i, j in g.edges)


def gossip_round(values: np.ndarray, matching) -> np.ndarray:
    """Replace each matched pair's values (rows) by their mean."""
    out = np.array(values, dtype=float)
    if matching:
        pairs = np.asarray(matching)
        mean = 0.5 * (out[pairs[:, 0]] + out[pairs[:, 1]])
        out[pairs[:, 0]] = mean
        out[pairs[:, 1]] = mean
    return out


def run_consensus(g: InterferenceGraph, values: np.ndarray, rounds: int,
                  rng: np.random.Generator) -> np.ndarray:
    out = np.array(values, dtype=float)
    if out.shape[0] != g.n:
        raise ValueError(f"need one row per link ({g.n}), got {out.shape[0]}")
    for _ in range(rounds):
        out = gossip_round(out, random_maximal_matching(g, rng))
    return out


def disagreement(values: np.ndarray) -> float:
    """Largest spread ``max - min`` across links, over all tracked columns."""
    v = np.asarray(values, dtype=float)
    return float(np.max(v.max(axis=0) - v.min(axis=0)))


@njit(cache=True)
def _gossip_kernel(values, edges, keys):
    n = values.shape[0]
    for r in range(keys.shape[0]):
        used = np.zeros(n, dtype=np.bool_)
        for k in np.argsort(keys[r]):
            i = edges[k, 0]
            j = edges[k, 1]
            if used[i] or used[j]:
                continue
            used[i] = True
            used[j] = True
            for c in range(values.shape[1]):
                m = 0.5 * (values[i, c] + values[j, c])
                values[i, c] = m
                values[j, c] = m


def gossip_rounds(g: InterferenceGraph, values: np.ndarray, rounds: int,
                  rng: np.random.Generator) -> None:
    """In-place equivalent of :func:`run_consensus` (same RNG draws)."""
    if rounds <= 0 or not g.edges:
        return
    edges = np.array(g.sorted_edges, dtype=np.int64)
    keys = rng.random((rounds, len(edges)))
    _gossip_kernel(values, edges, keys)
