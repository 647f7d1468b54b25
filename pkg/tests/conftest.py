"""Shared builders for randomized game instances."""

import numpy as np

from specgame.channels import ChannelSpec
from specgame.game import Contention, GameSpec


def random_channels(rng, n_channels, max_states=4):
    """Channels with ascending random rates in (0, ~8) and Dirichlet probs."""
    out = []
    for m in range(1, n_channels + 1):
        k = int(rng.integers(1, max_states + 1))
        rates = tuple(np.cumsum(rng.uniform(0.05, 2.0, size=k)))
        probs = tuple(rng.dirichlet(np.ones(k)))
        out.append(ChannelSpec(id=m, rates=rates, probs=probs))
    return tuple(out)


def random_game(
    rng,
    n_users=None,
    n_channels=None,
    theta_choices=(1e-2, 1e-1, 1.0),
    contention=Contention.FAIR_SHARE,
    max_states=4,
):
    """Homogeneous-exponent game with N in [2,5], M in [2,4] by default."""
    n = int(rng.integers(2, 6)) if n_users is None else n_users
    m = int(rng.integers(2, 5)) if n_channels is None else n_channels
    theta = float(rng.choice(theta_choices))
    return GameSpec(
        thetas=(theta,) * n,
        channels=random_channels(rng, m, max_states=max_states),
        contention=contention,
    )
