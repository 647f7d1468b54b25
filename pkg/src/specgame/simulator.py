"""Slot-level Monte Carlo engine.

Each trial runs the sense-transmit-update loop: draw channel states, resolve
contention among the users that picked the same channel, feed the realized
payoffs to the chosen algorithm, and score the run. Trials are independent
and embarrassingly parallel; every trial derives its own random stream from
(base_seed XOR trial_index), so results are byte-identical no matter how
many worker threads execute them or in which order they finish.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from specgame.capacity import empirical_effective_capacity
from specgame.channels import sample_realization
from specgame.game import Contention, GameSpec, congestion_counts, utility
from specgame.learning import (
    StepSchedule,
    init_sla,
    init_state,
    is_converged,
    random_baseline_profile,
    sample_profile,
    select_actions,
    sla_update,
    update_estimates,
    update_probabilities,
)

ALGORITHMS = ("learn", "sla", "random")

AGGREGATE_TOL = 1e-9

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One output of the splitmix64 sequence seeded at x.

    Written out rather than delegated to numpy's SeedSequence so the
    base_seed -> trial stream map is pinned by this file, not by whatever
    spawning scheme a numpy release happens to use.
    """
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_rng(base_seed: int, trial_index: int) -> np.random.Generator:
    """The dedicated random stream of one trial."""
    return np.random.default_rng(splitmix64((base_seed ^ trial_index) & _MASK64))


def worker_count() -> int:
    """Thread pool size: SPECGAME_THREADS when set, else the CPU count."""
    raw = os.environ.get("SPECGAME_THREADS")
    if raw is None:
        return min(32, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SPECGAME_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"SPECGAME_THREADS must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class SimConfig:
    """Everything one experiment needs besides an output directory.

    `window`, when set, fixes the number of trailing slots used for the
    empirical capacity estimate; left as None the estimate starts at the
    convergence slot (or halfway through when the trial never converges).
    """

    game: GameSpec
    iterations: int = 2000
    trials: int = 1
    base_seed: int = 0
    algorithm: str = "learn"
    eta: float = 0.1
    lam: float | None = None  # None -> the 1/t schedule
    epsilon: float = 0.01
    sla_gain: float = 0.08
    sla_rate_cap: float | None = None  # None -> largest channel rate
    random_per_slot: bool = False
    window: int | None = None
    collect_traces: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.base_seed <= _MASK64:
            raise ValueError("base_seed must fit in an unsigned 64-bit integer")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon!r}")
        if self.window is not None and not 1 <= self.window <= self.iterations:
            raise ValueError(
                f"window must be in 1..iterations, got {self.window!r}"
            )
        # surface bad step parameters at config time, not mid-trial
        StepSchedule(eta=self.eta, lam=self.lam)

    def rate_cap(self) -> float:
        if self.sla_rate_cap is not None:
            return self.sla_rate_cap
        return max(spec.rates[-1] for spec in self.game.channels)


@dataclass(frozen=True, eq=False)
class TrialTraces:
    """Per-slot state of one trial; slot t holds the post-update values.

    Compares by identity: the arrays are bulk telemetry, and element-wise
    comparison inside TrialResult equality would be both slow and ambiguous.
    """

    p: np.ndarray  # [iterations, N, M]
    q: np.ndarray  # [iterations, N, M], zero for algorithms without estimates
    actions: np.ndarray  # [iterations, N], 1-based channel ids
    payoffs: np.ndarray  # [iterations, N]


@dataclass(frozen=True)
class TrialResult:
    trial: int
    profile: tuple[int, ...]
    conv_slot: int | None
    ec_closed: tuple[float, ...]
    ec_empirical: tuple[float, ...]
    agg_ec_closed: float
    agg_ec_empirical: float
    traces: TrialTraces | None = None

    def __post_init__(self) -> None:
        assert abs(self.agg_ec_closed - sum(self.ec_closed)) <= AGGREGATE_TOL


def resolve_contention(
    model: Contention,
    realization,
    profile,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-user payoffs for one slot.

    FairShare splits each channel's realized rate evenly among its takers.
    SlotWinner hands the whole rate to one uniformly chosen taker per
    channel; draws happen in channel id order and only where two or more
    users collide, which keeps the stream layout reproducible.
    """
    rates = np.asarray(realization, dtype=float)
    payoffs = np.zeros(len(profile))
    if model is Contention.FAIR_SHARE:
        counts = congestion_counts(profile, len(rates))
        for user, a in enumerate(profile):
            payoffs[user] = rates[a - 1] / counts[a - 1]
        return payoffs
    takers: dict[int, list[int]] = {}
    for user, a in enumerate(profile):
        takers.setdefault(a, []).append(user)
    for a in sorted(takers):
        users = takers[a]
        winner = users[0] if len(users) == 1 else users[rng.integers(len(users))]
        payoffs[winner] = rates[a - 1]
    return payoffs


def _score(
    config: SimConfig,
    trial_index: int,
    profile: tuple[int, ...],
    conv_slot: int | None,
    payoff_log: np.ndarray,
    traces: TrialTraces | None,
) -> TrialResult:
    game = config.game
    if config.window is not None:
        burn_in = config.iterations - config.window
    elif conv_slot is not None:
        burn_in = min(conv_slot, config.iterations - 1)
    else:
        burn_in = config.iterations // 2
    tail = payoff_log[burn_in:]
    ec_emp = tuple(
        empirical_effective_capacity(tail[:, u], game.thetas[u])
        for u in range(game.n_users)
    )
    ec_closed = tuple(utility(game, profile, u) for u in range(game.n_users))
    return TrialResult(
        trial=trial_index,
        profile=profile,
        conv_slot=conv_slot,
        ec_closed=ec_closed,
        ec_empirical=ec_emp,
        agg_ec_closed=float(sum(ec_closed)),
        agg_ec_empirical=float(sum(ec_emp)),
        traces=traces,
    )


def run_trial(config: SimConfig, trial_index: int) -> TrialResult:
    """One independent run of the configured algorithm."""
    rng = trial_rng(config.base_seed, trial_index)
    game = config.game
    n, m, it = game.n_users, game.n_channels, config.iterations
    payoff_log = np.empty((it, n))
    trace_p = np.empty((it, n, m)) if config.collect_traces else None
    trace_q = np.zeros((it, n, m)) if config.collect_traces else None
    trace_a = np.empty((it, n), dtype=int) if config.collect_traces else None
    conv_slot: int | None = None

    if config.algorithm == "learn":
        schedule = StepSchedule(eta=config.eta, lam=config.lam)
        state = init_state(n, m)
        for slot in range(it):
            profile = select_actions(state, rng)
            realization = sample_realization(game.channels, rng)
            payoffs = resolve_contention(game.contention, realization, profile, rng)
            state = update_estimates(state, profile, payoffs, game.thetas, schedule)
            state = update_probabilities(state, schedule)
            payoff_log[slot] = payoffs
            if conv_slot is None and is_converged(state, config.epsilon):
                conv_slot = slot + 1
            if config.collect_traces:
                trace_p[slot] = state.p
                trace_q[slot] = state.q
                trace_a[slot] = profile
        final = tuple(int(a) + 1 for a in state.p.argmax(axis=1))

    elif config.algorithm == "sla":
        sla = init_sla(n, m, b=config.sla_gain, r_max=config.rate_cap())
        for slot in range(it):
            profile = sample_profile(sla.p, rng)
            realization = sample_realization(game.channels, rng)
            payoffs = resolve_contention(game.contention, realization, profile, rng)
            sla = sla_update(sla, profile, payoffs)
            payoff_log[slot] = payoffs
            if conv_slot is None and is_converged(sla, config.epsilon):
                conv_slot = slot + 1
            if config.collect_traces:
                trace_p[slot] = sla.p
                trace_a[slot] = profile
        final = tuple(int(a) + 1 for a in sla.p.argmax(axis=1))

    else:  # random baseline: no adaptation, profile fixed unless told otherwise
        profile = random_baseline_profile(n, m, rng)
        conv_slot = None if config.random_per_slot else 0
        uniform = np.full((n, m), 1.0 / m)
        for slot in range(it):
            if config.random_per_slot:
                profile = random_baseline_profile(n, m, rng)
            realization = sample_realization(game.channels, rng)
            payoffs = resolve_contention(game.contention, realization, profile, rng)
            payoff_log[slot] = payoffs
            if config.collect_traces:
                trace_p[slot] = uniform
                trace_a[slot] = profile
        final = profile

    traces = None
    if config.collect_traces:
        traces = TrialTraces(
            p=trace_p, q=trace_q, actions=trace_a, payoffs=payoff_log.copy()
        )
    return _score(config, trial_index, final, conv_slot, payoff_log, traces)


@dataclass(frozen=True)
class ExperimentSummary:
    """Across-trial statistics plus the per-trial rows that produced them."""

    results: tuple[TrialResult, ...]
    mean_agg_closed: float
    std_agg_closed: float
    mean_agg_empirical: float
    std_agg_empirical: float
    convergence_rate: float
    mean_conv_slot: float | None


def summarize(results) -> ExperimentSummary:
    rows = tuple(results)
    closed = np.array([r.agg_ec_closed for r in rows])
    emp = np.array([r.agg_ec_empirical for r in rows])
    conv = [r.conv_slot for r in rows if r.conv_slot is not None]
    std = lambda a: float(a.std(ddof=1)) if len(a) > 1 else 0.0
    return ExperimentSummary(
        results=rows,
        mean_agg_closed=float(closed.mean()),
        std_agg_closed=std(closed),
        mean_agg_empirical=float(emp.mean()),
        std_agg_empirical=std(emp),
        convergence_rate=len(conv) / len(rows),
        mean_conv_slot=float(np.mean(conv)) if conv else None,
    )


def run_experiment(config: SimConfig) -> ExperimentSummary:
    """All trials of one configuration, merged in trial-index order."""
    workers = min(worker_count(), config.trials)
    if workers == 1:
        results = [run_trial(config, i) for i in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda i: run_trial(config, i), range(config.trials))
            )
    return summarize(results)


SWEEP_VARIABLES = ("users", "theta", "eta")


@dataclass(frozen=True)
class SweepPoint:
    variable: str
    value: float
    summary: ExperimentSummary


def _with_value(config: SimConfig, variable: str, value) -> SimConfig:
    game = config.game
    if variable == "eta":
        return replace(config, eta=float(value))
    if variable == "theta":
        thetas = (float(value),) * game.n_users
        return replace(config, game=replace(game, thetas=thetas))
    # users: grow or shrink the population, keeping the common exponent
    theta = game.homogeneous_theta()
    if theta is None:
        raise ValueError("a user sweep needs a common QoS exponent to replicate")
    n = int(value)
    if n < 1:
        raise ValueError(f"user counts must be >= 1, got {value!r}")
    return replace(config, game=replace(game, thetas=(theta,) * n))


def sweep(config: SimConfig, variable: str, values) -> tuple[SweepPoint, ...]:
    """One experiment per value of the swept variable."""
    if variable not in SWEEP_VARIABLES:
        raise ValueError(
            f"sweep variable must be one of {SWEEP_VARIABLES}, got {variable!r}"
        )
    points = []
    for value in values:
        summary = run_experiment(_with_value(config, variable, value))
        points.append(SweepPoint(variable=variable, value=float(value), summary=summary))
    return tuple(points)
