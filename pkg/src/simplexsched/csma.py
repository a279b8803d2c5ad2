"""Discrete-time CSMA (Glauber dynamics) on independent sets.

Each slot a random *decision schedule* is drawn; every link in it that has
no active neighbour re-samples its state, switching on with probability
``exp(theta_i) / (1 + exp(theta_i))``. The chain is reversible with the
product-form stationary law ``x_sigma ~ exp(theta . sigma)``; the exact
transition matrix helpers here let that be checked numerically.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .topology import InterferenceGraph, Schedule, independent_set_matrix


@dataclass(frozen=True)
class DecisionRule:
    """Each link proposes w.p. ``q``; conflicts keep the lower-index link.

    Every link can enter the decision schedule when ``q < 1``; with
    ``q = 1`` the rule is deterministic and starves higher-index endpoints.
    """

    q: float = 0.25

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError(f"activation probability must lie in (0, 1], got {self.q}")


def resolve_proposals(g: InterferenceGraph, proposed: np.ndarray) -> np.ndarray:
    """Drop the higher-index endpoint of every conflicting proposed pair."""
    keep = np.array(proposed, dtype=np.int64)
    for i, j in g.sorted_edges:
        if keep[i] and keep[j]:
            keep[j] = 0
    return keep


def generate_decision_schedule(g: InterferenceGraph, rule: DecisionRule,
                               rng: np.random.Generator) -> np.ndarray:
    return resolve_proposals(g, rng.random(g.n) < rule.q)


def activation_prob(theta) -> np.ndarray:
    # logistic written to stay finite for large |theta|
    theta = np.asarray(theta, dtype=float)
    return np.exp(-np.logaddexp(0.0, -theta))


def gibbs_step(g: InterferenceGraph, sigma_prev: np.ndarray, theta, decision: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    """One slot of the CSMA chain; ``decision`` must be an independent set."""
    p = activation_prob(theta)
    out = np.array(sigma_prev, dtype=np.int64)
    coins = rng.random(g.n)
    nbrs = g.neighbors
    for i in np.flatnonzero(decision):
        if any(sigma_prev[j] for j in nbrs[i]):
            continue  # blocked: keeps its (necessarily zero) state
        out[i] = 1 if coins[i] < p[i] else 0
    return out


@dataclass
class CsmaState:
    sigma: np.ndarray
    theta: np.ndarray

    @classmethod
    def idle(cls, g: InterferenceGraph, theta=None) -> "CsmaState":
        theta = np.zeros(g.n) if theta is None else np.asarray(theta, dtype=float)
        return cls(np.zeros(g.n, dtype=np.int64), theta)

    def step(self, g: InterferenceGraph, rule: DecisionRule, rng: np.random.Generator) -> np.ndarray:
        decision = generate_decision_schedule(g, rule, rng)
        self.sigma = gibbs_step(g, self.sigma, self.theta, decision, rng)
        return self.sigma


def log_partition(g: InterferenceGraph, theta) -> float:
    scores = independent_set_matrix(g) @ np.asarray(theta, dtype=float)
    top = scores.max()
    return float(top + np.log(np.exp(scores - top).sum()))


def product_form_distribution(g: InterferenceGraph, theta) -> np.ndarray:
    """Probabilities ``exp(theta . sigma - A(theta))`` over the rows of
    :func:`independent_set_matrix`."""
    scores = independent_set_matrix(g) @ np.asarray(theta, dtype=float)
    return np.exp(scores - log_partition(g, theta))


def decision_distribution(g: InterferenceGraph, rule: DecisionRule) -> dict[tuple[int, ...], float]:
    """Exact law of the decision schedule, keyed by bit tuple."""
    law: dict[tuple[int, ...], float] = {}
    for bits in itertools.product((0, 1), repeat=g.n):
        k = sum(bits)
        prob = rule.q ** k * (1 - rule.q) ** (g.n - k)
        if prob == 0.0:
            continue
        key = tuple(int(b) for b in resolve_proposals(g, np.array(bits)))
        law[key] = law.get(key, 0.0) + prob
    return law


def exact_transition_matrix(g: InterferenceGraph, theta, rule: DecisionRule) -> np.ndarray:
    """One-slot transition probabilities between independent sets.

    Rows and columns follow :func:`independent_set_matrix`.
    """
    sets = independent_set_matrix(g)
    index = {tuple(row): k for k, row in enumerate(sets.tolist())}
    p = activation_prob(theta)
    law = decision_distribution(g, rule)
    nbrs = g.neighbors
    P = np.zeros((len(sets), len(sets)))
    for s, sigma in enumerate(sets.tolist()):
        for decision, pd in law.items():
            free = [i for i in range(g.n)
                    if decision[i] and not any(sigma[j] for j in nbrs[i])]
            for flips in itertools.product((0, 1), repeat=len(free)):
                nxt = list(sigma)
                prob = pd
                for i, b in zip(free, flips):
                    nxt[i] = b
                    prob *= p[i] if b else 1.0 - p[i]
                P[s, index[tuple(nxt)]] += prob
    return P


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Left Perron vector of a stochastic matrix, normalised to sum 1."""
    vals, vecs = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, k])
    return pi / pi.sum()


@dataclass
class ChainRun:
    trace: np.ndarray
    frequencies: np.ndarray = field(repr=False)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["slot", "schedule"])
            for t, row in enumerate(self.trace):
                writer.writerow([t, "".join(map(str, row))])


def run_chain(g: InterferenceGraph, theta, rule: DecisionRule, slots: int,
              rng: np.random.Generator, start=None) -> ChainRun:
    """Simulate the chain and tally visits per independent set.

    ``frequencies`` is indexed like :func:`independent_set_matrix` (so it
    needs ``n`` within the enumeration cap).
    """
    if slots < 0:
        raise ValueError("slots must be nonnegative")
    n = g.n
    p = activation_prob(theta)
    nbrs = g.neighbors
    edges = g.sorted_edges
    sigma = [0] * n if start is None else [int(b) for b in start]
    trace = np.zeros((slots, n), dtype=np.int8)
    proposals = rng.random((slots, n)) < rule.q
    coins = rng.random((slots, n))
    for t in range(slots):
        dec = proposals[t].tolist()
        for i, j in edges:
            if dec[i] and dec[j]:
                dec[j] = False
        prev = sigma[:]
        c = coins[t]
        for i in range(n):
            if dec[i] and not any(prev[j] for j in nbrs[i]):
                sigma[i] = 1 if c[i] < p[i] else 0
        trace[t] = sigma
    sets = independent_set_matrix(g)
    place = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    index = {int(code): k for k, code in enumerate(sets @ place)}
    counts = np.zeros(len(sets))
    if slots:
        codes, hits = np.unique(trace.astype(np.int64) @ place, return_counts=True)
        for code, h in zip(codes, hits):
            counts[index[int(code)]] = h
        counts /= slots
    return ChainRun(trace, counts)
