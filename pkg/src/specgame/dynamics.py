"""Mean-field dynamics of the learning process.

The learner's strategy profile follows a replicator-style ODE on the product
of simplices: each user's probability mass flows toward channels whose
expected surrogate payoff (against the other users' mixtures) beats the
user's current average. With a common QoS exponent the expected surrogate
potential is a Lyapunov function for this flow, and its stationary points
include every pure Nash profile.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from specgame.game import (
    GameSpec,
    _count_utility_tables,
    congestion_counts,
    surrogate_potential,
)

SIMPLEX_TOL = 1e-9


def check_mixed_profile(game: GameSpec, strategies) -> np.ndarray:
    """Validate an N x M array of per-user channel distributions."""
    p = np.asarray(strategies, dtype=float)
    if p.shape != (game.n_users, game.n_channels):
        raise ValueError(
            f"expected a {game.n_users} x {game.n_channels} strategy array, "
            f"got shape {p.shape}"
        )
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise ValueError("strategy rows must be finite and non-negative")
    err = np.abs(p.sum(axis=1) - 1.0).max()
    if err > SIMPLEX_TOL:
        raise ValueError(f"strategy rows drift off the simplex by {err:.3e}")
    return p


@dataclass(frozen=True)
class ActionValue:
    """Expected surrogate payoff of one pure action against the field."""

    value: float
    stderr: float
    exact: bool


def action_value(
    game: GameSpec,
    user: int,
    channel: int,
    strategies,
    exact_cap: int = 100_000,
    mc_samples: int = 10_000,
    rng: np.random.Generator | None = None,
) -> ActionValue:
    """E[u'_user | a_user = channel] with the others drawn from `strategies`.

    Enumerates the others' joint actions exactly while M**(N-1) fits under
    `exact_cap`; beyond that draws `mc_samples` joint actions and reports the
    standard error of the estimate.
    """
    p = check_mixed_profile(game, strategies)
    if not 1 <= channel <= game.n_channels:
        raise ValueError(f"channel must be in 1..{game.n_channels}")
    table = _count_utility_tables(game, "surrogate")[user]
    others = [k for k in range(game.n_users) if k != user]
    m = game.n_channels
    if m ** len(others) <= exact_cap:
        total = 0.0
        for combo in itertools.product(range(m), repeat=len(others)):
            w = 1.0
            for k, a in zip(others, combo):
                w *= p[k, a]
                if w == 0.0:
                    break
            if w == 0.0:
                continue
            c = 1 + sum(a == channel - 1 for a in combo)
            total += w * table[channel - 1, c - 1]
        return ActionValue(value=float(total), stderr=0.0, exact=True)
    if rng is None:
        rng = np.random.default_rng(0)
    draws = np.empty((mc_samples, len(others)), dtype=int)
    for j, k in enumerate(others):
        draws[:, j] = rng.choice(m, size=mc_samples, p=p[k])
    counts = 1 + (draws == channel - 1).sum(axis=1)
    vals = table[channel - 1, counts - 1]
    return ActionValue(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(mc_samples)),
        exact=False,
    )


class _FieldEvaluator:
    """Precomputed full-profile enumeration for fast repeated evaluations."""

    def __init__(self, game: GameSpec, cap: int = 100_000):
        n, m = game.n_users, game.n_channels
        total = m**n
        if total > cap:
            raise ValueError(
                f"profile space has {total} entries (M**N = {m}**{n}), beyond "
                f"{cap}; exact dynamics need a smaller game (action_value "
                "offers a Monte Carlo estimate)"
            )
        profiles = np.array(
            list(itertools.product(range(m), repeat=n)), dtype=int
        ).reshape(total, n)
        tables = _count_utility_tables(game, "surrogate")
        util = np.empty((total, n))
        theta = game.homogeneous_theta()
        self.phi = np.full(total, np.nan)
        for idx in range(total):
            prof = tuple(int(a) + 1 for a in profiles[idx])
            counts = congestion_counts(prof, m)
            for u in range(n):
                util[idx, u] = tables[u][prof[u] - 1, counts[prof[u] - 1] - 1]
            if theta is not None:
                self.phi[idx] = surrogate_potential(game, prof)
        self.game = game
        self.profiles = profiles
        self.util = util
        self.user_idx = np.broadcast_to(np.arange(n), (total, n))

    def omegas(self, p: np.ndarray) -> np.ndarray:
        """All action values at once: omega[n, m]."""
        w = p[self.user_idx, self.profiles]  # weight of each user's own action
        total, n = w.shape
        left = np.ones_like(w)
        np.cumprod(w[:, :-1], axis=1, out=left[:, 1:])
        right = np.ones_like(w)
        np.cumprod(w[:, :0:-1], axis=1, out=right[:, -2::-1])
        others_w = left * right
        contrib = others_w * self.util
        omega = np.zeros_like(p)
        np.add.at(omega, (self.user_idx, self.profiles), contrib)
        return omega

    def mean_potential(self, p: np.ndarray) -> float:
        w = p[self.user_idx, self.profiles]
        return float(w.prod(axis=1) @ self.phi)


def replicator_rhs(game: GameSpec, strategies, cap: int = 100_000) -> np.ndarray:
    """dP/dt: p_nm * (omega_nm - sum_m' p_nm' omega_nm'). Rows sum to zero."""
    p = check_mixed_profile(game, strategies)
    omega = _FieldEvaluator(game, cap=cap).omegas(p)
    avg = (p * omega).sum(axis=1, keepdims=True)
    return p * (omega - avg)


def mixed_potential(
    game: GameSpec,
    strategies,
    cap: int = 100_000,
    mc_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Expected surrogate potential under independent mixed strategies.

    Exact enumeration up to `cap` profiles; pass `mc_samples` (and optionally
    `rng`) beyond that for a Monte Carlo estimate.
    """
    p = check_mixed_profile(game, strategies)
    if game.homogeneous_theta() is None:
        raise ValueError("mixed potential needs a common QoS exponent")
    n, m = game.n_users, game.n_channels
    if m**n <= cap:
        return _FieldEvaluator(game, cap=cap).mean_potential(p)
    if mc_samples is None:
        raise ValueError(
            f"profile space has {m**n} entries, beyond {cap}; pass mc_samples "
            "for a Monte Carlo estimate"
        )
    if rng is None:
        rng = np.random.default_rng(0)
    draws = np.empty((mc_samples, n), dtype=int)
    for u in range(n):
        draws[:, u] = rng.choice(m, size=mc_samples, p=p[u])
    vals = [
        surrogate_potential(game, tuple(int(a) + 1 for a in row)) for row in draws
    ]
    return float(np.mean(vals))


class IntegrationDivergedError(RuntimeError):
    """Euler state left the finite range at some step."""

    def __init__(self, step: int):
        super().__init__(f"integration produced non-finite strategies at step {step}")
        self.step = step


@dataclass(frozen=True)
class Trajectory:
    """Euler path: strategies[t] with the recorded potential and max |dP/dt|."""

    strategies: np.ndarray  # [steps+1, N, M]
    potentials: np.ndarray  # [steps+1], nan when exponents are heterogeneous
    max_rhs: np.ndarray  # [steps+1]

    @property
    def final(self) -> np.ndarray:
        return self.strategies[-1]


def integrate(
    game: GameSpec,
    start,
    dt: float,
    steps: int,
    cap: int = 100_000,
) -> Trajectory:
    """Forward-Euler flow from `start`.

    Each step clamps negatives to zero and renormalizes the rows, so the
    iterate stays on the simplex product. Raises IntegrationDivergedError
    (carrying the step index) if the state turns non-finite.
    """
    if not 0.0 < dt <= 0.5:
        raise ValueError(f"dt must be in (0, 0.5], got {dt!r}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    p = check_mixed_profile(game, start).copy()
    ev = _FieldEvaluator(game, cap=cap)
    homogeneous = game.homogeneous_theta() is not None
    path = np.empty((steps + 1, *p.shape))
    pots = np.full(steps + 1, np.nan)
    maxr = np.empty(steps + 1)
    for t in range(steps + 1):
        omega = ev.omegas(p)
        rhs = p * (omega - (p * omega).sum(axis=1, keepdims=True))
        path[t] = p
        maxr[t] = float(np.abs(rhs).max())
        if homogeneous:
            pots[t] = ev.mean_potential(p)
        if t == steps:
            break
        p = p + dt * rhs
        if not np.all(np.isfinite(p)):
            raise IntegrationDivergedError(t + 1)
        np.clip(p, 0.0, None, out=p)
        p /= p.sum(axis=1, keepdims=True)
    return Trajectory(strategies=path, potentials=pots, max_rhs=maxr)


def is_stationary(game: GameSpec, strategies, tol: float = 1e-9) -> bool:
    """True when max |dP/dt| <= tol."""
    return float(np.abs(replicator_rhs(game, strategies)).max()) <= tol


def vertex_profile(game: GameSpec, profile) -> np.ndarray:
    """The pure strategy array putting all mass on `profile`."""
    p = np.zeros((game.n_users, game.n_channels))
    for n, a in enumerate(profile):
        p[n, a - 1] = 1.0
    return p
