"""Effective capacity of discrete-rate service processes.

For an i.i.d. service process x with QoS exponent theta > 0 the effective
capacity is

    C(theta) = -(1/theta) * log E[exp(-theta * x)],

the largest constant arrival rate whose queue-tail decays at least as fast as
exp(-theta * B). A first-order surrogate used by the learning layer is

    A(theta) = (1 - E[exp(-theta * x)]) / theta,

with the per-sample transform (1 - exp(-theta * r)) / theta as its unbiased
estimator target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

PROB_SUM_TOL = 1e-9


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta <= 0.0:
        raise ValueError(f"QoS exponent must be finite and > 0, got {theta!r}")
    return theta


@dataclass(frozen=True)
class RateDistribution:
    """A finite distribution over service rates."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.values) < 1:
            raise ValueError("distribution needs at least one value")
        if len(self.values) != len(self.probs):
            raise ValueError(
                f"{len(self.values)} values but {len(self.probs)} probs"
            )
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("values must be finite")
        if len(set(self.values)) != len(self.values):
            raise ValueError("values must be distinct")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ValueError("probs must lie in [0, 1]")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probs sum to {total!r}, expected 1 within {PROB_SUM_TOL}")

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot([(v - m) ** 2 for v in self.values], self.probs))


def _log_mgf_neg(dist: RateDistribution, theta: float) -> float:
    # log E[exp(-theta x)], evaluated in log space so large theta*x cannot
    # underflow the whole expectation to zero.
    return float(logsumexp(-theta * np.asarray(dist.values), b=np.asarray(dist.probs)))


def effective_capacity(dist: RateDistribution, theta: float) -> float:
    """C(theta) = -(1/theta) log E[exp(-theta x)]."""
    theta = _check_theta(theta)
    return -_log_mgf_neg(dist, theta) / theta


def approx_utility(dist: RateDistribution, theta: float) -> float:
    """A(theta) = (1 - E[exp(-theta x)]) / theta, the first-order surrogate."""
    theta = _check_theta(theta)
    return -math.expm1(_log_mgf_neg(dist, theta)) / theta


def payoff_transform(rate, theta):
    """(1 - exp(-theta r)) / theta for scalar or array rate (and theta)."""
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta_arr)) or np.any(theta_arr <= 0.0):
        raise ValueError(f"QoS exponent must be finite and > 0, got {theta!r}")
    out = -np.expm1(-theta_arr * np.asarray(rate, dtype=float)) / theta_arr
    return float(out) if np.ndim(out) == 0 else out


def empirical_effective_capacity(samples: Sequence[float], theta: float) -> float:
    """Plug-in estimate of C(theta) from observed rates.

    Equals effective_capacity of the empirical distribution of the samples.
    """
    theta = _check_theta(theta)
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one sample")
    return -(float(logsumexp(-theta * arr)) - math.log(arr.size)) / theta


def taylor_diagnostic(dist: RateDistribution, theta: float) -> tuple[float, float]:
    """Second-order expansion around theta=0 and its residual.

    Returns (mean - theta/2 * var, effective_capacity - that), using the
    population variance of the distribution.
    """
    theta = _check_theta(theta)
    approx = dist.mean() - 0.5 * theta * dist.variance()
    return approx, effective_capacity(dist, theta) - approx
