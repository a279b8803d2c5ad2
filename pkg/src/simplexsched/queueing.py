"""Per-link packet queues, Bernoulli arrivals and rate-stability metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ArrivalProcess:
    """I.i.d. Bernoulli arrivals, at most ``bound`` packet per link per slot."""

    rates: np.ndarray
    bound: int = 1

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if np.any(self.rates < 0) or np.any(self.rates > 1):
            raise ValueError("arrival rates must lie in [0, 1]")
        if self.bound != 1:
            raise ValueError("only Bernoulli arrivals (bound=1) are supported")

    @property
    def n(self) -> int:
        return len(self.rates)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.n) < self.rates).astype(np.int64)


def draw_arrivals(proc: ArrivalProcess, rng: np.random.Generator) -> np.ndarray:
    return proc.draw(rng)


@dataclass
class QueueLedger:
    """Cumulative arrivals/departures with ``Q = Q0 + A - D`` kept exact."""

    n: int
    q0: np.ndarray | None = None
    Q: np.ndarray = field(init=False)
    A_cum: np.ndarray = field(init=False)
    D_cum: np.ndarray = field(init=False)
    t: int = field(init=False, default=0)

    def __post_init__(self):
        self.q0 = (np.zeros(self.n, dtype=np.int64) if self.q0 is None
                   else np.asarray(self.q0, dtype=np.int64).copy())
        if self.q0.shape != (self.n,) or np.any(self.q0 < 0):
            raise ValueError("initial queues must be a nonnegative length-n vector")
        self.Q = self.q0.copy()
        self.A_cum = np.zeros(self.n, dtype=np.int64)
        self.D_cum = np.zeros(self.n, dtype=np.int64)

    def record_arrivals(self, arrivals: np.ndarray) -> None:
        """Add this slot's arrivals and advance the slot counter."""
        self.A_cum += arrivals
        self.Q += arrivals
        self.t += 1

    def apply_service(self, success: np.ndarray) -> np.ndarray:
        """Serve one packet on each successful link with a nonempty queue."""
        dep = ((np.asarray(success) > 0) & (self.Q > 0)).astype(np.int64)
        self.D_cum += dep
        self.Q -= dep
        return dep

    def arrival_rate_estimate(self) -> np.ndarray:
        """Running estimate ``A(t)/t`` of the arrival rates."""
        if self.t == 0:
            return np.zeros(self.n)
        return self.A_cum / self.t

    def check(self) -> None:
        assert np.array_equal(self.Q, self.q0 + self.A_cum - self.D_cum)
        assert np.all(self.Q >= 0)


def apply_service(ledger: QueueLedger, success: np.ndarray) -> np.ndarray:
    return ledger.apply_service(success)


def rate_stability_gap(ledger: QueueLedger, rates) -> float:
    """``max_i |D_i(t)/t - a_i|``."""
    if ledger.t == 0:
        raise ValueError("rate stability gap is undefined at t = 0")
    return float(np.max(np.abs(ledger.D_cum / ledger.t - np.asarray(rates, dtype=float))))
