"""Channel-selection game with effective-capacity payoffs.

N users each pick one of M finite-rate channels. Contention on a channel is
resolved either by splitting the realized rate evenly (FAIR_SHARE) or by
granting the slot to one uniformly chosen contender (SLOT_WINNER). A user's
payoff is the effective capacity of its resulting rate process.

The expected-rate restriction of the game (each user valuing mean rate per
contender) is an exact potential game with the classic Rosenthal potential.
With a common QoS exponent and fair sharing, the full game admits the ordinal
potential -(1/theta) * log phi, where phi sums the exponential rate terms
channel by channel over contender counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from specgame.capacity import RateDistribution, approx_utility, effective_capacity
from specgame.channels import ChannelSpec, mean_rate

ActionProfile = tuple[int, ...]

TIE_TOL = 1e-12


class Contention(Enum):
    """How simultaneous users of one channel share its realized rate."""

    FAIR_SHARE = "fair_share"
    SLOT_WINNER = "slot_winner"

    @classmethod
    def from_str(cls, name: str) -> "Contention":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(
            f"unknown contention model {name!r}; expected one of "
            f"{[m.value for m in cls]}"
        )


@dataclass(frozen=True)
class GameSpec:
    """N users with QoS exponents `thetas` over M channels."""

    thetas: tuple[float, ...]
    channels: tuple[ChannelSpec, ...]
    contention: Contention = Contention.FAIR_SHARE

    def __post_init__(self) -> None:
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "channels", tuple(self.channels))
        if len(self.thetas) < 1:
            raise ValueError("need at least one user")
        if len(self.channels) < 1:
            raise ValueError("need at least one channel")
        if any(not math.isfinite(t) or t <= 0.0 for t in self.thetas):
            raise ValueError("QoS exponents must be finite and > 0")
        for pos, ch in enumerate(self.channels, start=1):
            if ch.id != pos:
                raise ValueError(
                    f"channel ids must be 1..M in order; position {pos} has id {ch.id}"
                )

    @property
    def n_users(self) -> int:
        return len(self.thetas)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def homogeneous_theta(self) -> float | None:
        """The common QoS exponent, or None if users differ."""
        first = self.thetas[0]
        return first if all(t == first for t in self.thetas) else None


def validate_profile(game: GameSpec, profile: Sequence[int]) -> ActionProfile:
    prof = tuple(int(a) for a in profile)
    if len(prof) != game.n_users:
        raise ValueError(f"profile has {len(prof)} entries for {game.n_users} users")
    if any(not 1 <= a <= game.n_channels for a in prof):
        raise ValueError(f"profile entries must be channel ids in 1..{game.n_channels}")
    return prof


def congestion_counts(profile: Sequence[int], n_channels: int) -> tuple[int, ...]:
    """Number of users on each channel, indexed by channel id - 1."""
    counts = [0] * n_channels
    for a in profile:
        counts[a - 1] += 1
    return tuple(counts)


def shared_rate_distribution(
    channel: ChannelSpec, contenders: int, contention: Contention
) -> RateDistribution:
    """Per-user rate law on `channel` when `contenders` users occupy it."""
    if contenders < 1:
        raise ValueError("contenders must be >= 1")
    c = contenders
    if contention is Contention.FAIR_SHARE:
        return RateDistribution(
            values=tuple(r / c for r in channel.rates),
            probs=channel.probs,
        )
    # SLOT_WINNER: full rate with prob pi_k / c, otherwise 0.
    mass: dict[float, float] = {}
    for r, p in zip(channel.rates, channel.probs):
        mass[r] = mass.get(r, 0.0) + p / c
    if c > 1:
        mass[0.0] = mass.get(0.0, 0.0) + (1.0 - 1.0 / c)
    values = tuple(sorted(mass))
    return RateDistribution(values=values, probs=tuple(mass[v] for v in values))


def user_rate_distribution(
    game: GameSpec, profile: Sequence[int], user: int
) -> RateDistribution:
    """Rate law seen by `user` (0-based) under `profile`."""
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    channel = game.channels[prof[user] - 1]
    return shared_rate_distribution(channel, counts[prof[user] - 1], game.contention)


def utility(game: GameSpec, profile: Sequence[int], user: int) -> float:
    """Effective capacity of `user`'s rate process under `profile`."""
    return effective_capacity(
        user_rate_distribution(game, profile, user), game.thetas[user]
    )


def surrogate_utility(game: GameSpec, profile: Sequence[int], user: int) -> float:
    """First-order surrogate payoff (1 - E[exp(-theta r)]) / theta."""
    return approx_utility(
        user_rate_distribution(game, profile, user), game.thetas[user]
    )


def expected_rate_share(game: GameSpec, profile: Sequence[int], user: int) -> float:
    """Mean rate per contender on the user's channel; same under both models."""
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    channel = game.channels[prof[user] - 1]
    return mean_rate(channel) / counts[prof[user] - 1]


def rosenthal_potential(game: GameSpec, profile: Sequence[int]) -> float:
    """Exact potential of the expected-rate-share game: sum_m sum_{l<=c_m} mean_m / l."""
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    total = 0.0
    for ch, c in zip(game.channels, counts):
        mr = mean_rate(ch)
        total += sum(mr / l for l in range(1, c + 1))
    return total


def _phi_exp_sum(game: GameSpec, counts: Sequence[int], theta: float) -> float:
    """sum_m sum_{l<=c_m} sum_k pi_mk exp(-theta s_mk / l)."""
    total = 0.0
    for ch, c in zip(game.channels, counts):
        for l in range(1, c + 1):
            total += sum(
                p * math.exp(-theta * r / l) for r, p in zip(ch.rates, ch.probs)
            )
    return total


def _require_homogeneous(game: GameSpec) -> float:
    theta = game.homogeneous_theta()
    if theta is None:
        raise ValueError(
            "this potential needs a common QoS exponent; users have "
            f"{sorted(set(game.thetas))}"
        )
    return theta


def ordinal_potential(game: GameSpec, profile: Sequence[int]) -> float:
    """Ordinal potential -(1/theta) log phi of the fair-share game.

    Requires a common QoS exponent. Unilateral deviations change this value
    with the same sign as the deviator's utility change (fair-share model).
    """
    theta = _require_homogeneous(game)
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    return -math.log(_phi_exp_sum(game, counts, theta)) / theta


def surrogate_potential(game: GameSpec, profile: Sequence[int]) -> float:
    """Exact potential (1 - phi) / theta of the surrogate-payoff game."""
    theta = _require_homogeneous(game)
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    return (1.0 - _phi_exp_sum(game, counts, theta)) / theta


# --- pure-strategy equilibrium tooling -------------------------------------

_PAYOFFS: dict[str, Callable[[RateDistribution, float], float]] = {
    "capacity": effective_capacity,
    "surrogate": approx_utility,
}


def _count_utility_tables(game: GameSpec, payoff: str) -> list[np.ndarray]:
    """Per user: array [M, N] of utility on channel m with c contenders.

    Built through the same distribution + capacity path as the utility op,
    so table lookups agree bit-for-bit with direct evaluation.
    """
    try:
        payoff_fn = _PAYOFFS[payoff]
    except KeyError:
        raise ValueError(f"unknown payoff {payoff!r}; expected 'capacity' or 'surrogate'")
    N, M = game.n_users, game.n_channels
    by_theta: dict[float, np.ndarray] = {}
    for theta in set(game.thetas):
        tab = np.empty((M, N))
        for mi, ch in enumerate(game.channels):
            for c in range(1, N + 1):
                dist = shared_rate_distribution(ch, c, game.contention)
                tab[mi, c - 1] = payoff_fn(dist, theta)
        by_theta[theta] = tab
    return [by_theta[t] for t in game.thetas]


@dataclass(frozen=True)
class NashResult:
    """Outcome of a pure-Nash check; witness fields set when not an equilibrium."""

    is_nash: bool
    user: int | None = None
    better_channel: int | None = None
    gain: float | None = None


def _find_improvement(
    tables: list[np.ndarray],
    prof: ActionProfile,
    counts: Sequence[int],
    tol: float,
) -> NashResult:
    for n, a in enumerate(prof):
        current = tables[n][a - 1, counts[a - 1] - 1]
        for b in range(1, len(counts) + 1):
            if b == a:
                continue
            candidate = tables[n][b - 1, counts[b - 1]]
            if candidate > current + tol:
                return NashResult(
                    False, user=n, better_channel=b, gain=float(candidate - current)
                )
    return NashResult(True)


def is_nash(
    game: GameSpec,
    profile: Sequence[int],
    tol: float = TIE_TOL,
    payoff: str = "capacity",
) -> NashResult:
    """Check unilateral deviations; a deviation must gain more than `tol` to count."""
    prof = validate_profile(game, profile)
    counts = congestion_counts(prof, game.n_channels)
    tables = _count_utility_tables(game, payoff)
    return _find_improvement(tables, prof, counts, tol)


def enumerate_nash(
    game: GameSpec,
    limit: int = 1_000_000,
    tol: float = TIE_TOL,
    payoff: str = "capacity",
) -> list[ActionProfile]:
    """All pure Nash profiles, in lexicographic order.

    Refuses when M**N exceeds `limit`, since the search is exhaustive.
    """
    N, M = game.n_users, game.n_channels
    total = M**N
    if total > limit:
        raise ValueError(
            f"profile space has {total} entries (M**N = {M}**{N}), beyond the "
            f"limit of {limit}; raise `limit` or shrink the game"
        )
    tables = _count_utility_tables(game, payoff)
    out = []
    for prof in itertools.product(range(1, M + 1), repeat=N):
        counts = congestion_counts(prof, M)
        if _find_improvement(tables, prof, counts, tol).is_nash:
            out.append(prof)
    return out


class BestResponseLimitError(RuntimeError):
    """Raised when the improvement path does not settle in time."""

    def __init__(self, steps: int, profile: ActionProfile):
        super().__init__(f"no equilibrium after {steps} best-response steps")
        self.steps = steps
        self.profile = profile


@dataclass(frozen=True)
class BestResponsePath:
    profile: ActionProfile
    steps: int


def best_response_path(
    game: GameSpec,
    start: Sequence[int],
    rng: np.random.Generator,
    max_steps: int,
    tol: float = TIE_TOL,
    payoff: str = "capacity",
) -> BestResponsePath:
    """Random-order best-response dynamics from `start`.

    Each step picks a uniformly random user that has an improving deviation
    and moves it to its best channel (ties toward the lowest channel id).
    Raises BestResponseLimitError (carrying the last profile) if more than
    `max_steps` improvements occur without reaching an equilibrium.
    """
    prof = list(validate_profile(game, start))
    counts = list(congestion_counts(prof, game.n_channels))
    tables = _count_utility_tables(game, payoff)
    for step in range(max_steps + 1):
        improvers = []
        for n, a in enumerate(prof):
            current = tables[n][a - 1, counts[a - 1] - 1]
            for b in range(1, game.n_channels + 1):
                if b != a and tables[n][b - 1, counts[b - 1]] > current + tol:
                    improvers.append(n)
                    break
        if not improvers:
            return BestResponsePath(tuple(prof), step)
        if step == max_steps:
            break
        n = improvers[int(rng.integers(len(improvers)))]
        a = prof[n]
        options = np.array(
            [
                tables[n][b - 1, counts[b - 1] - (1 if b == a else 0)]
                for b in range(1, game.n_channels + 1)
            ]
        )
        best = int(np.argmax(options)) + 1  # argmax takes the lowest id on ties
        counts[a - 1] -= 1
        counts[best - 1] += 1
        prof[n] = best
    raise BestResponseLimitError(max_steps, tuple(prof))


# --- potential verification --------------------------------------------------


@dataclass(frozen=True)
class PotentialReport:
    """What a sweep over unilateral deviations found."""

    exhaustive: bool
    deviations_checked: int
    epg_max_abs_error: float
    opg_sign_disagreements: int | None
    opg_zero_mismatches: int | None


def _all_profiles(n_users: int, n_channels: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(1, n_channels + 1)] * n_users), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def verify_potentials(
    game: GameSpec,
    rng: np.random.Generator | None = None,
    profile_cap: int = 4096,
    samples: int = 512,
    zero_tol: float = TIE_TOL,
) -> PotentialReport:
    """Compare payoff deltas against potential deltas over unilateral deviations.

    Exact-potential check: max |delta expected-rate-share - delta Rosenthal|.
    Ordinal check (common QoS exponent only): count deviations whose utility
    delta and ordinal-potential delta disagree in sign, or where exactly one
    of the two is zero within `zero_tol`. Utilities follow the game's own
    contention model, so slot-winner games may legitimately report nonzero
    disagreements; the potential algebra matches fair sharing.
    """
    N, M = game.n_users, game.n_channels
    exhaustive = M**N <= profile_cap
    if exhaustive:
        profiles = _all_profiles(N, M)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        profiles = rng.integers(1, M + 1, size=(samples, N))

    theta = game.homogeneous_theta()
    cap_tables = _count_utility_tables(game, "capacity")
    means = np.array([mean_rate(ch) for ch in game.channels])
    cum_share = np.zeros((M, N + 1))
    cum_share[:, 1:] = np.cumsum(means[:, None] / np.arange(1, N + 1)[None, :], axis=1)
    if theta is not None:
        exp_terms = np.zeros((M, N + 1))
        for mi, ch in enumerate(game.channels):
            for l in range(1, N + 1):
                exp_terms[mi, l] = sum(
                    p * math.exp(-theta * r / l) for r, p in zip(ch.rates, ch.probs)
                )
        cum_exp = np.cumsum(exp_terms, axis=1)

    checked = 0
    epg_max = 0.0
    sign_bad = 0 if theta is not None else None
    zero_bad = 0 if theta is not None else None
    for prof_row in profiles:
        prof = tuple(int(a) for a in prof_row)
        counts = congestion_counts(prof, M)
        phi_share = float(sum(cum_share[mi, c] for mi, c in enumerate(counts)))
        if theta is not None:
            phi_exp = float(sum(cum_exp[mi, c] for mi, c in enumerate(counts)))
            phi_ord = -math.log(phi_exp) / theta
        for n, a in enumerate(prof):
            share_now = means[a - 1] / counts[a - 1]
            util_now = cap_tables[n][a - 1, counts[a - 1] - 1]
            for b in range(1, M + 1):
                if b == a:
                    continue
                checked += 1
                new_counts = list(counts)
                new_counts[a - 1] -= 1
                new_counts[b - 1] += 1
                d_share = means[b - 1] / new_counts[b - 1] - share_now
                d_phi_share = (
                    float(sum(cum_share[mi, c] for mi, c in enumerate(new_counts)))
                    - phi_share
                )
                epg_max = max(epg_max, abs(d_share - d_phi_share))
                if theta is not None:
                    d_util = cap_tables[n][b - 1, counts[b - 1]] - util_now
                    new_phi_exp = float(
                        sum(cum_exp[mi, c] for mi, c in enumerate(new_counts))
                    )
                    d_phi_ord = -math.log(new_phi_exp) / theta - phi_ord
                    u_zero = abs(d_util) <= zero_tol
                    p_zero = abs(d_phi_ord) <= zero_tol
                    if u_zero != p_zero:
                        zero_bad += 1
                    elif not u_zero and (d_util > 0) != (d_phi_ord > 0):
                        sign_bad += 1
    return PotentialReport(
        exhaustive=exhaustive,
        deviations_checked=checked,
        epg_max_abs_error=epg_max,
        opg_sign_disagreements=sign_bad,
        opg_zero_mismatches=zero_bad,
    )
