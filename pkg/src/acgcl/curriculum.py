"""Difficulty pacing and adversarial sample reweighting.

The pacing function ramps the difficulty percentile linearly from ``theta0``
at epoch 0 to ``max_difficulty`` at epoch ``ramp_epochs`` and clamps there.

Reweighting modes, all closed forms over the current per-sample losses:

* ``spl``      : w = 1 for losses strictly below a threshold, else 0.
* ``hard_acl`` : w = 1 inside the open window (lambda2, lambda1), else 0;
  both too-easy and too-hard samples are dropped.
* ``soft_acl`` : w = 1 on [lambda2, lambda1), loss/lambda2 below lambda2
  (easy samples keep a reduced weight), 0 at or above lambda1.
* ``uniform``  : w = 1 everywhere.

Thresholds start at the median (lambda1) and 0.95x the minimum (lambda2) of
the first step's losses, then widen every step: lambda1 grows by eta1 > 1 and
lambda2 shrinks by eta2 < 1, so the set of admitted samples only expands for
fixed losses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, SizeError

MODES = ("uniform", "spl", "hard_acl", "soft_acl")


@dataclass(frozen=True)
class PacingConfig:
    theta0: float
    max_difficulty: float
    ramp_epochs: int

    def __post_init__(self):
        if not (0.0 < self.theta0 <= self.max_difficulty <= 100.0):
            raise ConfigError("theta0/max_difficulty: need 0 < theta0 <= max_difficulty <= 100")
        if self.ramp_epochs < 1:
            raise ConfigError("ramp_epochs: must be >= 1")


def pacing_difficulty(epoch: int, config: PacingConfig) -> float:
    """Linear ramp theta(t) = min(1, theta0/M + (1 - theta0/M) * t/T) * M."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    start = config.theta0 / config.max_difficulty
    frac = min(1.0, start + (1.0 - start) * epoch / config.ramp_epochs)
    return frac * config.max_difficulty


@dataclass(frozen=True)
class AclThresholds:
    lambda1: float          # upper admission threshold
    lambda2: float          # lower admission threshold
    eta1: float = 1.05      # per-step growth of lambda1
    eta2: float = 0.95      # per-step decay of lambda2

    def __post_init__(self):
        if not self.lambda2 < self.lambda1:
            raise ConfigError(f"thresholds: lambda2 ({self.lambda2}) must be < lambda1 ({self.lambda1})")
        if self.eta1 <= 1.0:
            raise ConfigError("eta1: must be > 1")
        if not (0.0 < self.eta2 < 1.0):
            raise ConfigError("eta2: must be in (0, 1)")


@dataclass(frozen=True)
class SampleWeights:
    values: np.ndarray      # each in [0, 1]
    mode: str

    def active_fraction(self) -> float:
        return float(np.mean(self.values > 0)) if self.values.size else 0.0

    def histogram(self) -> dict[str, float]:
        """Fractions of zero, strictly fractional, and full weights."""
        v = self.values
        n = max(1, v.size)
        zero = float(np.sum(v == 0.0)) / n
        one = float(np.sum(v == 1.0)) / n
        return {"zero": zero, "fractional": 1.0 - zero - one, "one": one}


def spl_weights(losses, lam: float) -> SampleWeights:
    if lam <= 0:
        raise ConfigError("spl threshold: must be positive")
    losses = np.asarray(losses, dtype=np.float64)
    return SampleWeights(values=(losses < lam).astype(np.float64), mode="spl")


def hard_acl_weights(losses, thresholds: AclThresholds) -> SampleWeights:
    losses = np.asarray(losses, dtype=np.float64)
    inside = (thresholds.lambda2 < losses) & (losses < thresholds.lambda1)
    return SampleWeights(values=inside.astype(np.float64), mode="hard_acl")


def soft_acl_weights(losses, thresholds: AclThresholds) -> SampleWeights:
    if thresholds.lambda2 <= 0:
        raise ConfigError("thresholds: soft mode needs lambda2 > 0")
    losses = np.asarray(losses, dtype=np.float64)
    values = np.zeros_like(losses)
    easy = losses < thresholds.lambda2
    mid = (losses >= thresholds.lambda2) & (losses < thresholds.lambda1)
    values[easy] = losses[easy] / thresholds.lambda2
    values[mid] = 1.0
    return SampleWeights(values=values, mode="soft_acl")


def uniform_weights(n: int) -> SampleWeights:
    return SampleWeights(values=np.ones(n), mode="uniform")


def init_thresholds(first_step_losses, eta1: float = 1.05, eta2: float = 0.95) -> AclThresholds:
    """lambda1 = median of the losses, lambda2 = 0.95 * their minimum."""
    losses = np.asarray(first_step_losses, dtype=np.float64)
    if losses.size == 0:
        raise SizeError("cannot initialize thresholds from an empty loss list")
    return AclThresholds(
        lambda1=float(np.median(losses)),
        lambda2=float(0.95 * losses.min()),
        eta1=eta1,
        eta2=eta2,
    )


def decay_thresholds(thresholds: AclThresholds) -> AclThresholds:
    """Widen the admission window one step."""
    return replace(
        thresholds,
        lambda1=thresholds.lambda1 * thresholds.eta1,
        lambda2=thresholds.lambda2 * thresholds.eta2,
    )


def weights_for_mode(mode: str, losses, thresholds: AclThresholds | None) -> SampleWeights:
    losses = np.asarray(losses, dtype=np.float64)
    if mode == "uniform":
        return uniform_weights(losses.size)
    if thresholds is None:
        raise ConfigError(f"acl_mode: mode {mode!r} needs thresholds")
    if mode == "spl":
        return spl_weights(losses, thresholds.lambda1)
    if mode == "hard_acl":
        return hard_acl_weights(losses, thresholds)
    if mode == "soft_acl":
        return soft_acl_weights(losses, thresholds)
    raise ConfigError(f"acl_mode: unknown mode {mode!r}, expected one of {MODES}")
