"""Adversarial and cycle-consistency objectives as exact float64 operations.

These are the numeric contracts the training harness logs against: the
two-player value estimate over discriminator probability batches, its
discriminator/generator loss views, the L1 cycle-reconstruction penalty,
and the combined objective. No gradients here; frameworks own those.

Probabilities are clamped to [1e-7, 1 - 1e-7] before any log so batches at
the boundary stay finite; the bound is part of the contract so independent
reimplementations agree bit for bit in doubles. Logs are natural, and every
reduction is a mean, so reported losses are batch-size invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyBatchError, NonFiniteError, ShapeMismatchError

PROB_EPS = 1e-7

SATURATING = "saturating"
NON_SATURATING = "non_saturating"

DEFAULT_LAMBDA_CYC = 10.0


def clamp_probability(p: float) -> float:
    return min(max(float(p), PROB_EPS), 1.0 - PROB_EPS)


def _clamped(values: Sequence[float], what: str) -> tuple[float, ...]:
    out = tuple(clamp_probability(v) for v in values)
    if not out:
        raise EmptyBatchError(f"{what} is empty")
    return out


@dataclass(frozen=True)
class ProbBatch:
    """Discriminator outputs on true samples (d_real) and generated ones (d_fake)."""

    d_real: tuple[float, ...]
    d_fake: tuple[float, ...]

    def __init__(self, d_real: Sequence[float], d_fake: Sequence[float]):
        object.__setattr__(self, "d_real", _clamped(d_real, "d_real"))
        object.__setattr__(self, "d_fake", _clamped(d_fake, "d_fake"))


def _mean_log(values: tuple[float, ...]) -> float:
    return math.fsum(math.log(v) for v in values) / len(values)


def gan_value_estimate(b: ProbBatch) -> float:
    """Monte-Carlo estimate of the two-player value:
    mean(log d_real) + mean(log(1 - d_fake)), natural log."""
    return _mean_log(b.d_real) + _mean_log(tuple(1.0 - v for v in b.d_fake))


def discriminator_loss(b: ProbBatch) -> float:
    """The discriminator ascends the value, so its loss is the exact negation."""
    return -gan_value_estimate(b)


def generator_loss(d_fake: Sequence[float], variant: str = NON_SATURATING) -> float:
    """Generator objective over fake-sample probabilities.

    saturating: mean(log(1 - d)) — the raw two-player form.
    non_saturating: -mean(log d) — the standard gradient-friendly surrogate.
    """
    clamped = _clamped(d_fake, "d_fake")
    if variant == SATURATING:
        return _mean_log(tuple(1.0 - v for v in clamped))
    if variant == NON_SATURATING:
        return -_mean_log(clamped)
    raise ValueError(f"unknown generator loss variant {variant!r}")


def cycle_loss(x, x_rec) -> float:
    """Mean absolute elementwise difference (L1) between an input and its
    round-trip reconstruction. Symmetric; zero iff the arrays are equal."""
    a = np.asarray(getattr(x, "samples", x), dtype=np.float64)
    b = np.asarray(getattr(x_rec, "samples", x_rec), dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shapes {a.shape} and {b.shape} differ")
    if a.size == 0:
        raise EmptyBatchError("cycle_loss over empty arrays")
    return float(np.mean(np.abs(a - b)))


def combined_objective(
    adv_g_xy: float,
    adv_g_yx: float,
    cyc_fwd: float,
    cyc_bwd: float,
    lambda_cyc: float,
) -> float:
    """Full two-direction generator objective:
    adv_g_xy + adv_g_yx + lambda_cyc * (cyc_fwd + cyc_bwd)."""
    parts = (adv_g_xy, adv_g_yx, cyc_fwd, cyc_bwd, lambda_cyc)
    if not all(math.isfinite(v) for v in parts):
        raise NonFiniteError(f"non-finite objective component in {parts}")
    if lambda_cyc < 0:
        raise ValueError("lambda_cyc must be >= 0")
    return adv_g_xy + adv_g_yx + lambda_cyc * (cyc_fwd + cyc_bwd)


LOSS_REPORT_FIELDS = (
    "value_estimate",
    "d_loss",
    "g_loss",
    "cycle_forward",
    "cycle_backward",
    "total",
    "lambda_cyc",
)


@dataclass(frozen=True)
class LossReport:
    """One step's loss summary, serialized field-for-field to JSON.

    g_loss aggregates the adversarial terms of both translation directions,
    so total = g_loss + lambda_cyc * (cycle_forward + cycle_backward);
    d_loss is the discriminators' own objective and is not added to total.
    """

    value_estimate: float
    d_loss: float
    g_loss: float
    cycle_forward: float
    cycle_backward: float
    total: float
    lambda_cyc: float

    def __post_init__(self):
        values = [getattr(self, f) for f in LOSS_REPORT_FIELDS]
        if not all(math.isfinite(v) for v in values):
            raise NonFiniteError(f"non-finite loss report: {values}")

    def to_dict(self) -> dict:
        return {f: float(getattr(self, f)) for f in LOSS_REPORT_FIELDS}

    @staticmethod
    def from_dict(obj: dict) -> "LossReport":
        return LossReport(**{f: float(obj[f]) for f in LOSS_REPORT_FIELDS})

    def recomputed_total(self) -> float:
        return combined_objective(
            self.g_loss, 0.0, self.cycle_forward, self.cycle_backward, self.lambda_cyc
        )
