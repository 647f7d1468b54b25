"""Experiment configuration: JSON schema, validation, and named presets.

A config file is a single UTF-8 JSON object. Unknown keys are rejected with
their full path so typos surface immediately instead of silently running
defaults. Channels are given either with explicit state probabilities or
with an average SNR in dB, in which case the probabilities come from the
fading model with this module's calibrated thresholds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from specgame.channels import ChannelSpec, rayleigh_state_probs
from specgame.game import Contention, GameSpec
from specgame.simulator import ALGORITHMS, SWEEP_VARIABLES, SimConfig

# Discrete transmission rates of the five-state link model, packets per slot.
RATE_STEPS = (0.0, 1.0, 2.0, 3.0, 6.0)

# Interior SNR thresholds (linear scale) between the five states, calibrated
# so a 5 dB average-SNR channel yields state probabilities
# (0.3376, 0.2348, 0.2517, 0.1757, 0.0002) up to rounding.
SNR_THRESHOLDS = (
    1.3024968714769842,
    2.6865670606103915,
    5.495531430172048,
    26.933729756554143,
)


class ConfigError(ValueError):
    """A config file failed validation; the message carries the key path."""


def snr_channel(id: int, avg_snr_db: float, rates=RATE_STEPS) -> ChannelSpec:
    """A rate-adaptive fading channel at the given average SNR."""
    probs = rayleigh_state_probs(avg_snr_db, (0.0, *SNR_THRESHOLDS, math.inf))
    return ChannelSpec(id=id, rates=tuple(float(r) for r in rates), probs=probs)


def preset_channels(snrs_db=(5.0, 6.0, 7.0, 8.0, 9.0)) -> tuple[ChannelSpec, ...]:
    return tuple(snr_channel(i + 1, s) for i, s in enumerate(snrs_db))


@dataclass(frozen=True)
class ExperimentConfig:
    """A SimConfig plus artifact plumbing and an optional sweep request."""

    sim: SimConfig
    out_dir: str = "runs"
    plot: bool = False
    preset: str | None = None
    sweep_variable: str | None = None
    sweep_values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if (self.sweep_variable is None) != (self.sweep_values is None):
            raise ConfigError(
                "sweep: variable and values must be given together"
            )
        if self.sweep_variable is not None:
            if self.sweep_variable not in SWEEP_VARIABLES:
                raise ConfigError(
                    f"sweep.variable: must be one of {SWEEP_VARIABLES}, "
                    f"got {self.sweep_variable!r}"
                )
            if not self.sweep_values:
                raise ConfigError("sweep.values: must be a non-empty list")


def _reject_unknown(mapping: dict, allowed, path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown config key {path}{key!r}")


def _get(mapping: dict, key: str, kind, path: str, default=None, required=False):
    if key not in mapping or mapping[key] is None:
        if required:
            raise ConfigError(f"{path}{key}: required")
        return default
    value = mapping[key]
    # bool is an int subclass; keep the two apart
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(
            f"{path}{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _parse_channel(data, index: int) -> ChannelSpec:
    path = f"game.channels[{index}]."
    if not isinstance(data, dict):
        raise ConfigError(f"game.channels[{index}]: expected an object")
    _reject_unknown(data, {"id", "rates", "probs", "avg_snr_db", "thresholds_db"}, path)
    id = _get(data, "id", int, path, default=index + 1)
    rates = _get(data, "rates", list, path, required=True)
    probs = _get(data, "probs", list, path)
    snr = _get(data, "avg_snr_db", float, path)
    thresholds_db = _get(data, "thresholds_db", list, path)
    if (probs is None) == (snr is None):
        raise ConfigError(
            f"game.channels[{index}]: give exactly one of probs or avg_snr_db"
        )
    if probs is None:
        if thresholds_db is None:
            thresholds = SNR_THRESHOLDS
        else:
            thresholds = tuple(10.0 ** (float(t) / 10.0) for t in thresholds_db)
        probs = rayleigh_state_probs(snr, (0.0, *thresholds, math.inf))
    elif thresholds_db is not None:
        raise ConfigError(
            f"game.channels[{index}]: thresholds_db only applies with avg_snr_db"
        )
    try:
        return ChannelSpec(
            id=id,
            rates=tuple(float(r) for r in rates),
            probs=tuple(float(p) for p in probs),
        )
    except ValueError as err:
        raise ConfigError(f"game.channels[{index}]: {err}") from err


def _parse_game(data) -> GameSpec:
    if not isinstance(data, dict):
        raise ConfigError("game: expected an object")
    _reject_unknown(
        data, {"thetas", "theta", "n_users", "channels", "contention"}, "game."
    )
    channels_raw = _get(data, "channels", list, "game.", required=True)
    channels = tuple(_parse_channel(c, i) for i, c in enumerate(channels_raw))
    thetas = _get(data, "thetas", list, "game.")
    theta = _get(data, "theta", float, "game.")
    n_users = _get(data, "n_users", int, "game.")
    if (thetas is None) == (theta is None):
        raise ConfigError("game: give exactly one of thetas or theta + n_users")
    if thetas is not None:
        if n_users is not None and n_users != len(thetas):
            raise ConfigError("game.n_users: contradicts the length of thetas")
        theta_tuple = tuple(float(t) for t in thetas)
    else:
        if n_users is None:
            raise ConfigError("game.n_users: required alongside theta")
        theta_tuple = (theta,) * n_users
    contention = _get(data, "contention", str, "game.", default="fair_share")
    try:
        return GameSpec(
            thetas=theta_tuple,
            channels=channels,
            contention=Contention.from_str(contention),
        )
    except ValueError as err:
        raise ConfigError(f"game: {err}") from err


_TOP_KEYS = {
    "game",
    "iterations",
    "trials",
    "base_seed",
    "algorithm",
    "eta",
    "lambda",
    "epsilon",
    "sla_gain",
    "sla_rate_cap",
    "random_per_slot",
    "window",
    "collect_traces",
    "out_dir",
    "plot",
    "preset",
    "sweep",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed JSON object into an ExperimentConfig."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    _reject_unknown(data, _TOP_KEYS, "")
    game = _parse_game(_get(data, "game", dict, "", required=True))
    lam_raw = data.get("lambda")
    if lam_raw is None or lam_raw == "1/t":
        lam = None
    elif isinstance(lam_raw, (int, float)) and not isinstance(lam_raw, bool):
        lam = float(lam_raw)
    else:
        raise ConfigError('lambda: expected a number or the string "1/t"')
    try:
        sim = SimConfig(
            game=game,
            iterations=_get(data, "iterations", int, "", default=2000),
            trials=_get(data, "trials", int, "", default=1),
            base_seed=_get(data, "base_seed", int, "", default=0),
            algorithm=_get(data, "algorithm", str, "", default="learn"),
            eta=_get(data, "eta", float, "", default=0.1),
            lam=lam,
            epsilon=_get(data, "epsilon", float, "", default=0.01),
            sla_gain=_get(data, "sla_gain", float, "", default=0.08),
            sla_rate_cap=_get(data, "sla_rate_cap", float, ""),
            random_per_slot=_get(data, "random_per_slot", bool, "", default=False),
            window=_get(data, "window", int, ""),
            collect_traces=_get(data, "collect_traces", bool, "", default=False),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err
    sweep_raw = _get(data, "sweep", dict, "")
    variable = values = None
    if sweep_raw is not None:
        _reject_unknown(sweep_raw, {"variable", "values"}, "sweep.")
        variable = _get(sweep_raw, "variable", str, "sweep.", required=True)
        values_raw = _get(sweep_raw, "values", list, "sweep.", required=True)
        values = tuple(float(v) for v in values_raw)
    return ExperimentConfig(
        sim=sim,
        out_dir=_get(data, "out_dir", str, "", default="runs"),
        plot=_get(data, "plot", bool, "", default=False),
        preset=_get(data, "preset", str, ""),
        sweep_variable=variable,
        sweep_values=values,
    )


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: malformed JSON: {err}") from err
    return config_from_dict(data)


def config_to_dict(config: ExperimentConfig) -> dict:
    """The JSON form of a config; config_from_dict inverts it exactly."""
    sim = config.sim
    game = sim.game
    out = {
        "game": {
            "thetas": list(game.thetas),
            "contention": game.contention.value,
            "channels": [
                {"id": c.id, "rates": list(c.rates), "probs": list(c.probs)}
                for c in game.channels
            ],
        },
        "iterations": sim.iterations,
        "trials": sim.trials,
        "base_seed": sim.base_seed,
        "algorithm": sim.algorithm,
        "eta": sim.eta,
        "lambda": "1/t" if sim.lam is None else sim.lam,
        "epsilon": sim.epsilon,
        "sla_gain": sim.sla_gain,
        "sla_rate_cap": sim.sla_rate_cap,
        "random_per_slot": sim.random_per_slot,
        "window": sim.window,
        "collect_traces": sim.collect_traces,
        "out_dir": config.out_dir,
        "plot": config.plot,
        "preset": config.preset,
    }
    if config.sweep_variable is not None:
        out["sweep"] = {
            "variable": config.sweep_variable,
            "values": list(config.sweep_values),
        }
    return out


def _preset_game(theta: float, n_users: int) -> dict:
    return {
        "theta": theta,
        "n_users": n_users,
        "contention": "slot_winner",
        "channels": [
            {"id": i + 1, "rates": list(RATE_STEPS), "avg_snr_db": snr}
            for i, snr in enumerate((5.0, 6.0, 7.0, 8.0, 9.0))
        ],
    }


def _fig2() -> dict:
    # Eight users on the five reference channels, delay-tolerant exponent.
    # A constant estimator gain: congestion keeps shifting while the others
    # learn, and a 1/t schedule freezes the estimates before it settles.
    return {
        "game": _preset_game(theta=0.01, n_users=8),
        "iterations": 2000,
        "trials": 200,
        "algorithm": "learn",
        "eta": 0.1,
        "lambda": 0.3,
        "preset": "fig2",
    }


def _eta_sweep() -> dict:
    base = _fig2()
    base.update(
        preset="eta_sweep",
        trials=50,
        sweep={"variable": "eta", "values": [0.05, 0.1, 0.2, 0.4]},
    )
    return base


def _users(theta: float, name: str) -> dict:
    return {
        "game": _preset_game(theta=theta, n_users=5),
        "iterations": 2000,
        "trials": 200,
        "algorithm": "learn",
        "lambda": 0.3,
        "preset": name,
        "sweep": {"variable": "users", "values": [5, 8, 15]},
    }


def _sla_mix() -> dict:
    # nine users with individually assigned exponents, reward-inaction learner
    thetas = [0.02, 0.05, 0.1, 0.2, 0.5, 0.002, 0.005, 0.01, 0.001]
    game = _preset_game(theta=0.01, n_users=9)
    del game["theta"], game["n_users"]
    game["thetas"] = thetas
    return {
        "game": game,
        "iterations": 3000,
        "trials": 100,
        "algorithm": "sla",
        "sla_gain": 0.08,
        "preset": "sla_mix",
    }


PRESETS = {
    "fig2": _fig2,
    "eta_sweep": _eta_sweep,
    "users_loose": lambda: _users(0.01, "users_loose"),
    "users_strict": lambda: _users(0.1, "users_strict"),
    "sla_mix": _sla_mix,
}


def preset_config(name: str) -> ExperimentConfig:
    """Expand a named preset into a fully validated config."""
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r} (available: {known})")
    return config_from_dict(PRESETS[name]())
