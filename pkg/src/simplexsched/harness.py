"""Seeded experiments comparing the distributed simplex scheduler, a CSMA
baseline and a centralized reference, with per-slot traces and summaries.

Arrivals and scheduler randomness come from two independent child streams of
the experiment seed, so different algorithms with the same seed see the same
arrival sequence.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .csma import CsmaState, DecisionRule
from .dis_sched import DisSched, DisSchedConfig
from .queueing import ArrivalProcess, QueueLedger, rate_stability_gap
from .simplex import sim_run
from .topology import InterferenceGraph, max_uniform_rate, parse_graph_spec

ALGORITHMS = ("dis", "csma", "sim")


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation run. Serializes to flat ``key=value`` text."""

    graph: str = "star:7"
    load: float = 0.95  # fraction of the max uniform rate
    horizon: int = 200_000
    algorithm: str = "dis"
    epsilon: float = 0.01
    alpha: float = 10.0
    q: float = 0.25
    rounds: int = 100
    update_period: int = 1000
    exact_consensus: bool = False
    gamma_floor: float = 0.0  # lower end of the gap projection
    theta_min: float = -5.0  # baseline price clip
    theta_max: float = 8.0
    seed: int = 1
    output: str = ""  # trace CSV path; empty disables the trace file

    def __post_init__(self):
        if not 0 < self.load <= 1:
            raise ValueError(f"load must lie in (0, 1], got {self.load}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.theta_min > self.theta_max:
            raise ValueError("theta_min must not exceed theta_max")
        DecisionRule(self.q)
        self.dis_config()

    def dis_config(self) -> DisSchedConfig:
        return DisSchedConfig(epsilon=self.epsilon, alpha=self.alpha, rounds=self.rounds,
                              update_period=self.update_period, q=self.q,
                              exact_consensus=self.exact_consensus,
                              gamma_floor=self.gamma_floor)

    def to_text(self) -> str:
        return "".join(f"{f.name}={_format(getattr(self, f.name))}\n"
                       for f in dataclasses.fields(self))

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        """Parse ``key=value`` lines (``#`` comments allowed); ``overrides`` win."""
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            values[key.strip()] = value.strip()
        values.update(overrides)
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: type(f.default) for f in dataclasses.fields(cls)}
        unknown = set(values) - set(types)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**{k: _coerce(types[k], v, k) for k, v in values.items()})

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(), **overrides)


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(kind: type, value, key: str):
    if not isinstance(value, str):
        return value
    try:
        if kind is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is int:
            return int(float(value)) if "e" in value.lower() else int(value)
        return kind(value)
    except ValueError:
        raise ValueError(f"bad value for {key}: {value!r}") from None


@dataclass
class Trace:
    """Per-slot record. ``schedules`` holds the attempted transmission
    vectors; ``gamma`` is NaN for algorithms without a gap."""

    queues: np.ndarray
    gamma: np.ndarray
    schedules: np.ndarray
    basis_changed: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.queues)

    @property
    def n(self) -> int:
        return self.queues.shape[1]

    def tail(self, slots: int) -> "Trace":
        k = max(self.horizon - slots, 0)
        return Trace(self.queues[k:], self.gamma[k:], self.schedules[k:], self.basis_changed[k:])

    def max_queue_series(self) -> np.ndarray:
        return self.queues.max(axis=1)

    def schedule_codes(self) -> np.ndarray:
        place = 1 << np.arange(self.n - 1, -1, -1, dtype=np.int64)
        return self.schedules.astype(np.int64) @ place

    def to_csv(self, path) -> None:
        n = self.n
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot", *(f"q{i}" for i in range(n)), "gamma", "schedule", "basis_changed"])
            bits = ["".join(map(str, row)) for row in self.schedules.tolist()]
            for t, (q, g, b, c) in enumerate(zip(self.queues.tolist(), self.gamma.tolist(),
                                                  bits, self.basis_changed.tolist())):
                w.writerow([t, *q, "" if np.isnan(g) else repr(g), b, int(c)])

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "slot":
            raise ValueError(f"{path}: not a trace file")
        n = sum(1 for h in rows[0] if h.startswith("q") and h[1:].isdigit())
        body = rows[1:]
        return cls(
            queues=np.array([[int(v) for v in r[1:n + 1]] for r in body], dtype=np.int64).reshape(-1, n),
            gamma=np.array([float(r[n + 1]) if r[n + 1] else np.nan for r in body]),
            schedules=np.array([[int(c) for c in r[n + 2]] for r in body], dtype=np.int8).reshape(-1, n),
            basis_changed=np.array([r[n + 3] == "1" for r in body], dtype=bool),
        )


@dataclass
class Summary:
    algorithm: str
    graph: str
    seed: int
    horizon: int
    max_queue: int  # over the final half
    mean_queue: float  # per link, over the final half
    gap: float
    basis_changes: int = 0
    agreement_rate: float = float("nan")
    final_gamma: float = float("nan")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={_format(v)}\n" for k, v in self.as_dict().items())


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: Summary
    trace: Trace = field(repr=False)
    ledger: QueueLedger = field(repr=False)


class CsmaBaseline:
    """CSMA with per-link prices adapted towards the observed arrival rates:
    ``theta_i <- clip(theta_i + epsilon (a_hat_i - sigma_i))``."""

    def __init__(self, g: InterferenceGraph, epsilon: float = 0.01, q: float = 0.25,
                 theta_min: float = -5.0, theta_max: float = 8.0):
        self.g = g
        self.rule = DecisionRule(q)
        self.epsilon = epsilon
        self.bounds = (theta_min, theta_max)
        self.state = CsmaState.idle(g)

    @property
    def theta(self) -> np.ndarray:
        return self.state.theta

    def step(self, a_hat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        sigma = self.state.step(self.g, self.rule, rng)
        self.state.theta = np.clip(self.state.theta + self.epsilon * (a_hat - sigma), *self.bounds)
        return sigma


def csma_baseline_step(baseline: CsmaBaseline, ledger: QueueLedger,
                       rng: np.random.Generator) -> np.ndarray:
    return baseline.step(ledger.arrival_rate_estimate(), rng)


class SimReference:
    """Centralized reference: solve the relaxation once with the true rates,
    then serve the support schedule of largest queue weight each slot."""

    def __init__(self, g: InterferenceGraph, rates: np.ndarray):
        cols, x = sim_run(g, rates).support()
        self.support = cols[x > 0]

    def step(self, queues: np.ndarray) -> np.ndarray:
        return self.support[int(np.argmax(self.support @ queues))]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one seeded simulation; writes the trace CSV if ``cfg.output`` is set."""
    g = parse_graph_spec(cfg.graph)
    rates = np.full(g.n, cfg.load * max_uniform_rate(g))
    arrivals_rng, sched_rng = (np.random.default_rng(s)
                               for s in np.random.SeedSequence(cfg.seed).spawn(2))
    proc = ArrivalProcess(rates)
    ledger = QueueLedger(g.n)
    T = cfg.horizon
    queues = np.zeros((T, g.n), dtype=np.int64)
    gamma = np.full(T, np.nan)
    schedules = np.zeros((T, g.n), dtype=np.int8)
    changed = np.zeros(T, dtype=bool)
    arrivals = (arrivals_rng.random((T, g.n)) < rates).astype(np.int64)

    dis = base = ref = None
    if cfg.algorithm == "dis":
        dis = DisSched(g, cfg.dis_config())
    elif cfg.algorithm == "csma":
        base = CsmaBaseline(g, cfg.epsilon, cfg.q, cfg.theta_min, cfg.theta_max)
    else:
        ref = SimReference(g, rates)

    for t in range(T):
        ledger.record_arrivals(arrivals[t])
        if dis is not None:
            out = dis.slot_step(ledger.arrival_rate_estimate(), sched_rng)
            attempted, success = out.attempted, out.success
            gamma[t] = dis.gamma
            changed[t] = out.basis_changed
        elif base is not None:
            attempted = success = csma_baseline_step(base, ledger, sched_rng)
        else:
            attempted = success = ref.step(ledger.Q)
        ledger.apply_service(success)
        queues[t] = ledger.Q
        schedules[t] = attempted

    trace = Trace(queues, gamma, schedules, changed)
    half = trace.tail(T - T // 2)
    summary = Summary(
        algorithm=cfg.algorithm, graph=cfg.graph, seed=cfg.seed, horizon=T,
        max_queue=int(half.queues.max()), mean_queue=float(half.queues.mean()),
        gap=rate_stability_gap(ledger, rates),
    )
    if dis is not None:
        summary.basis_changes = dis.stats.basis_changes
        summary.agreement_rate = dis.stats.agreement_rate
        summary.final_gamma = dis.gamma
    if cfg.output:
        out_path = Path(cfg.output)
        if not out_path.parent.is_dir():
            raise FileNotFoundError(f"output directory {out_path.parent} does not exist")
        trace.to_csv(out_path)
    return ExperimentResult(cfg, summary, trace, ledger)


def mode_residence(codes: np.ndarray) -> float:
    """Mean number of consecutive slots a schedule is held before it changes."""
    codes = np.asarray(codes)
    if len(codes) == 0:
        return 0.0
    runs = 1 + int(np.count_nonzero(codes[1:] != codes[:-1]))
    return len(codes) / runs


def top_mode_share(codes: np.ndarray, k: int = 2) -> float:
    """Share of transmitting slots (nonempty schedule) held by the ``k`` most
    frequent schedules."""
    codes = np.asarray(codes)
    codes = codes[codes != 0]
    if len(codes) == 0:
        return 0.0
    _, counts = np.unique(codes, return_counts=True)
    return float(np.sort(counts)[::-1][:k].sum() / len(codes))


@dataclass
class TrendTest:
    tau: float
    p_value: float
    trend: bool


def trend_test(series, blocks: int = 20, level: float = 0.05) -> TrendTest:
    """One-sided Mann-Kendall test for upward trend on block maxima.

    The statistic is Kendall's tau between block index and block maximum.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < blocks or blocks < 3:
        raise ValueError("need at least 3 blocks and one sample per block")
    maxima = np.array([b.max() for b in np.array_split(x, blocks)])
    if np.all(maxima == maxima[0]):
        return TrendTest(0.0, 1.0, False)
    res = stats.kendalltau(np.arange(blocks), maxima, alternative="greater")
    return TrendTest(float(res.statistic), float(res.pvalue), bool(res.pvalue < level))


@dataclass
class Comparison:
    """Side-by-side steady-state statistics of two traces (final half)."""

    rows: dict  # statistic -> (a, b)
    queue_ratio: float  # max queue of a over max queue of b

    def format(self, names=("a", "b")) -> str:
        width = max(len(k) for k in self.rows)
        lines = [f"{'statistic':<{width}}  {names[0]:>12}  {names[1]:>12}"]
        for key, (u, v) in self.rows.items():
            lines.append(f"{key:<{width}}  {u:>12.6g}  {v:>12.6g}")
        lines.append(f"{'queue ratio':<{width}}  {self.queue_ratio:>12.6g}")
        return "\n".join(lines)


def _steady_stats(trace: Trace) -> dict:
    half = trace.tail(trace.horizon - trace.horizon // 2)
    codes = half.schedule_codes()
    return {
        "max queue": float(half.queues.max()),
        "mean queue": float(half.queues.mean()),
        "mode residence": mode_residence(codes),
        "top-2 mode share": top_mode_share(codes),
    }


def compare_report(trace_a: Trace, trace_b: Trace) -> Comparison:
    if trace_a.horizon != trace_b.horizon:
        raise ValueError(f"horizons differ: {trace_a.horizon} vs {trace_b.horizon}")
    sa, sb = _steady_stats(trace_a), _steady_stats(trace_b)
    ma, mb = sa["max queue"], sb["max queue"]
    ratio = 1.0 if ma == mb else (np.inf if mb == 0 else ma / mb)
    return Comparison({k: (sa[k], sb[k]) for k in sa}, float(ratio))
