"""Distributed simplex scheduler.

Every link keeps its own price ``theta_i``, a copy of the throughput gap,
and local copies of the weights ``theta . sigma`` of the ``n + 1`` candidate
schedules (the basis plus one entering schedule). A slot runs, in order:

1. one CSMA step with fugacities ``alpha * theta`` (explores new schedules),
2. per-link max-weight choice among the candidates using local copies,
3. primal-dual updates of ``theta`` and the gap, then gossip rounds that
   re-align the local copies,
4. every ``update_period`` slots, if the gap has settled, the lightest
   basis column is replaced by the entering schedule, which is then
   reloaded from the CSMA state.

Network-wide sums ``theta . v`` are tracked by dynamic average consensus:
link ``i`` holds a running value whose network mean equals the sum because
each link injects ``n * (its new contribution - its old contribution)``
before gossiping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import gossip_rounds
from .csma import DecisionRule, gibbs_step, generate_decision_schedule
from .simplex import Basis, SingularBasisError
from .topology import InterferenceGraph, NotIndependentError, is_independent


@dataclass(frozen=True)
class DisSchedConfig:
    """Tuning knobs of the scheduler.

    Attributes:
        epsilon: step size of the price and gap updates.
        alpha: CSMA temperature; fugacities are ``alpha * theta``.
        rounds: gossip rounds per slot.
        update_period: slots between basis-update attempts.
        settle_tol: if set, an update also requires the mean ``|d gamma|``
            over the last period to be below this value.
        gap_tol: updates are only attempted while the period-averaged gap
            exceeds this value.
        margin: the entering schedule must beat the lightest basis column
            by at least this much.
        average_weights: compare columns with the period-averaged prices
            instead of the instantaneous ones.
        idle_candidate: also offer the empty schedule, whose weight is 0 at
            every link without any gossip.
        gamma_floor: lower end of the gap projection interval. Negative
            values let the prices aim for spare capacity (off by default).
        q: proposal probability of the CSMA decision rule.
        exact_consensus: replace gossip by exact averaging (for tests).
        freeze_basis: never update the basis.
    """

    epsilon: float = 0.01
    alpha: float = 10.0
    rounds: int = 100
    update_period: int = 1000
    settle_tol: float | None = None
    gap_tol: float = 1e-3
    margin: float = 1e-6
    average_weights: bool = True
    idle_candidate: bool = True
    gamma_floor: float = 0.0
    q: float = 0.25
    exact_consensus: bool = False
    freeze_basis: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.rounds < 0 or self.update_period < 1:
            raise ValueError("rounds must be >= 0 and update_period >= 1")
        if not -1.0 <= self.gamma_floor <= 0.0:
            raise ValueError("gamma_floor must lie in [-1, 0]")


@dataclass
class SlotOutcome:
    attempted: np.ndarray
    success: np.ndarray
    choices: np.ndarray  # candidate index picked by each link (n + 1 = idle)
    agreed: bool
    basis_changed: bool


@dataclass
class DisSchedStats:
    slots: int = 0
    agreed_slots: int = 0
    conflict_slots: int = 0
    basis_changes: int = 0
    update_attempts: int = 0
    singular_swaps: int = 0

    @property
    def agreement_rate(self) -> float:
        return self.agreed_slots / self.slots if self.slots else 1.0


class DisSched:
    """State and per-slot logic of the distributed simplex scheduler."""

    def __init__(self, g: InterferenceGraph, config: DisSchedConfig | None = None,
                 basis=None, sigma_new=None):
        self.g = g
        self.cfg = config or DisSchedConfig()
        self.rule = DecisionRule(self.cfg.q)
        n = g.n
        self.n = n
        cols = np.zeros((n + 1, n), dtype=np.int64)
        cols[:n] = np.eye(n, dtype=np.int64) if basis is None else np.asarray(basis)
        if sigma_new is not None:
            cols[n] = np.asarray(sigma_new)
        for row in cols:
            if not is_independent(g, row):
                raise NotIndependentError(f"candidate {''.join(map(str, row))} is not independent")
        self.basis = Basis(cols[:n])
        self.candidates = cols  # rows 0..n-1: basis, row n: entering schedule
        self.theta = np.zeros(n)
        self.sigma_csma = np.zeros(n, dtype=np.int64)
        # per-link consensus state: [weight copies (n+1) | theta.a_hat copy | gamma copy]
        self.local = np.zeros((n, n + 3))
        self.local[:, n + 2] = 1.0
        self._contrib = np.zeros((n, n + 2))
        self._adj_pairs = np.array(g.sorted_edges, dtype=np.int64).reshape(-1, 2)
        self.a_hat = np.zeros(n)  # last arrival-rate estimate seen
        self.slot = 0
        self._dgamma_acc = 0.0
        self._gamma_acc = 0.0
        self._theta_acc = np.zeros(n)
        self.stats = DisSchedStats()

    # views into the consensus state
    @property
    def weight_copies(self) -> np.ndarray:
        return self.local[:, : self.n + 1]

    @property
    def gamma_copies(self) -> np.ndarray:
        return self.local[:, self.n + 2]

    @property
    def gamma(self) -> float:
        return float(self.local[0, self.n + 2])

    @property
    def sigma_new(self) -> np.ndarray:
        return self.candidates[self.n]

    def true_weights(self) -> np.ndarray:
        return self.candidates @ self.theta

    def _contributions(self, a_hat: np.ndarray) -> np.ndarray:
        c = np.empty((self.n, self.n + 2))
        c[:, : self.n + 1] = self.n * self.theta[:, None] * self.candidates.T
        c[:, self.n + 1] = self.n * self.theta * a_hat
        return c

    def _inject(self, a_hat: np.ndarray) -> None:
        new = self._contributions(a_hat)
        self.local[:, : self.n + 2] += new - self._contrib
        self._contrib = new

    # --- phases -------------------------------------------------------------

    def csma_phase(self, rng: np.random.Generator) -> np.ndarray:
        decision = generate_decision_schedule(self.g, self.rule, rng)
        self.sigma_csma = gibbs_step(self.g, self.sigma_csma, self.cfg.alpha * self.theta,
                                     decision, rng)
        return self.sigma_csma

    def scheduling_phase(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each link picks its max-weight candidate from its own copies.

        Returns ``(attempted, success, choices)``. Ties go to the lowest
        candidate index. With ``idle_candidate`` the empty schedule (weight 0,
        index ``n + 1``) is chosen when every copy is negative. Adjacent
        links that both transmit collide and neither succeeds.
        """
        copies = self.weight_copies
        choices = np.argmax(copies, axis=1)
        attempted = self.candidates[choices, np.arange(self.n)]
        if self.cfg.idle_candidate:
            idle = copies[np.arange(self.n), choices] < 0.0
            choices[idle] = self.n + 1
            attempted[idle] = 0
        success = attempted.copy()
        if len(self._adj_pairs):
            i, j = self._adj_pairs[:, 0], self._adj_pairs[:, 1]
            clash = (attempted[i] == 1) & (attempted[j] == 1)
            success[i[clash]] = 0
            success[j[clash]] = 0
        return attempted, success, choices

    def update_phase(self, a_hat: np.ndarray, sigma_sched: np.ndarray,
                     rng: np.random.Generator) -> None:
        n, eps = self.n, self.cfg.epsilon
        self.a_hat = np.asarray(a_hat, dtype=float)
        gamma_old = self.gamma
        self.theta = self.theta + eps * ((1.0 - self.gamma_copies) * a_hat - sigma_sched)
        if self.cfg.exact_consensus:
            ip = float(self.theta @ a_hat)
            g_new = min(max(gamma_old + eps * (ip - 1.0), self.cfg.gamma_floor), 1.0)
            self.local[:, : n + 1] = self.true_weights()[None, :]
            self.local[:, n + 1] = ip
            self.local[:, n + 2] = g_new
            self._contrib = self._contributions(a_hat)
        else:
            self._inject(a_hat)
            gam = self.local[:, n + 2]
            self.local[:, n + 2] = np.clip(gam + eps * (self.local[:, n + 1] - 1.0), self.cfg.gamma_floor, 1.0)
            gossip_rounds(self.g, self.local, self.cfg.rounds, rng)
        self._dgamma_acc += abs(self.gamma - gamma_old)
        self._gamma_acc += self.gamma
        self._theta_acc += self.theta

    def basis_update_phase(self, a_hat: np.ndarray) -> bool:
        """Attempt a basis update at the end of every ``update_period`` slots.

        The attempt is skipped while the period-averaged gap is at most
        ``gap_tol`` (there is nothing left to improve) or, when
        ``settle_tol`` is set, while the gap is still moving.
        """
        if self.cfg.freeze_basis or (self.slot + 1) % self.cfg.update_period:
            return False
        T = self.cfg.update_period
        mean_gamma = self._gamma_acc / T
        settled = self.cfg.settle_tol is None or self._dgamma_acc / T < self.cfg.settle_tol
        theta_bar = self._theta_acc / T
        self._dgamma_acc = self._gamma_acc = 0.0
        self._theta_acc = np.zeros(self.n)
        if not settled or mean_gamma <= self.cfg.gap_tol:
            return False
        w = self.candidates @ (theta_bar if self.cfg.average_weights else self.theta)
        return self.try_swap(w, a_hat)

    def try_swap(self, weights, a_hat: np.ndarray | None = None) -> bool:
        """Swap the lightest basis column for the entering schedule.

        ``weights`` holds one value per candidate (basis columns, then the
        entering schedule). The swap is skipped if the entering schedule is
        empty, already basic, not heavier by ``margin`` or would make the
        basis singular. Either way the entering schedule is then reloaded
        from the CSMA state and the local weight copies are re-synced.
        """
        self.stats.update_attempts += 1
        n = self.n
        w = np.asarray(weights, dtype=float)
        j = int(np.argmin(w[:n]))
        new = self.sigma_new.copy()
        changed = False
        if new.any() and self.basis.index_of(new) is None and w[n] > w[j] + self.cfg.margin:
            cols = self.basis.columns.copy()
            cols[j] = new
            try:
                self.basis = Basis(cols)
            except SingularBasisError:
                self.stats.singular_swaps += 1
            else:
                # the entering column's copies are already aligned; move them over
                self.candidates[j] = new
                self.local[:, j] = self.local[:, n]
                self._contrib[:, j] = self._contrib[:, n]
                changed = True
        self.candidates[n] = self.sigma_csma
        a_hat = self.a_hat if a_hat is None else a_hat
        if self.cfg.exact_consensus:
            self.local[:, : n + 1] = self.true_weights()[None, :]
            self._contrib = self._contributions(a_hat)
        else:
            self._inject(a_hat)
        if changed:
            self.stats.basis_changes += 1
        return changed

    def slot_step(self, a_hat: np.ndarray, rng: np.random.Generator) -> SlotOutcome:
        """Run one slot given the current arrival-rate estimates."""
        self.csma_phase(rng)
        attempted, success, choices = self.scheduling_phase()
        agreed = bool(np.all(choices == choices[0]))
        self.update_phase(a_hat, attempted, rng)
        changed = self.basis_update_phase(a_hat)
        self.slot += 1
        st = self.stats
        st.slots += 1
        st.agreed_slots += agreed
        st.conflict_slots += bool(np.any(success != attempted))
        return SlotOutcome(attempted, success, choices, agreed, changed)
