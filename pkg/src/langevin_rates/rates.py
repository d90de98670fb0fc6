"""Explicit L2 decay rates for underdamped Langevin dynamics.

The main estimate reads

    lambda = sqrt(m) * log(1 + gamma sqrt(m) / (c0 (sqrt(m) + R + gamma)^2))

with Poincare constant ``m``, friction ``gamma``, potential constant ``R``
(see :func:`langevin_rates.potentials.select_R`) and a universal constant
``c0`` whose value is not known; it defaults to 1 and every scaling law
below is independent of it. The accompanying prefactor ``C0`` is likewise
unknown and only flagged on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidParameterError
from .potentials import Regime, RegimeR

__all__ = [
    "DEFAULT_C0",
    "RateInputs",
    "RateResult",
    "main_rate",
    "optimal_gamma",
    "optimal_gamma_general",
    "rate_at_optimal_gamma",
    "overdamped_rate",
    "gamma_sweep",
    "divergence_bounds",
]

DEFAULT_C0 = 1.0


def _positive(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParameterError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class RateInputs:
    m: float
    gamma: float
    R: float = 0.0
    c0: float = DEFAULT_C0

    def __post_init__(self):
        object.__setattr__(self, "m", _positive("m", self.m))
        object.__setattr__(self, "gamma", _positive("gamma", self.gamma))
        object.__setattr__(self, "c0", _positive("c0", self.c0))
        R = float(self.R)
        if not (R >= 0 and math.isfinite(R)):
            raise InvalidParameterError(f"R must be finite and >= 0, got {self.R}")
        object.__setattr__(self, "R", R)


@dataclass(frozen=True)
class RateResult:
    lam: float
    inputs: RateInputs
    regime: RegimeR
    # the bound holds as ||f(t)|| <= C0 exp(-lam t) ||f(0)|| with an unspecified universal C0
    prefactor_note: bool = field(default=True)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "m": self.inputs.m,
            "gamma": self.inputs.gamma,
            "R": self.inputs.R,
            "c0": self.inputs.c0,
            "regime": self.regime.regime.value,
            "universal_prefactor": self.prefactor_note,
        }


def _regime_for(R: float) -> RegimeR:
    return RegimeR(R, Regime.CONVEX if R == 0 else Regime.GENERAL)


def main_rate(inputs: RateInputs, regime: RegimeR | None = None) -> RateResult:
    """Evaluate the explicit rate for ``inputs``.

    ``regime`` only labels the result; when omitted it is inferred from
    ``inputs.R`` (``Convex`` for ``R = 0``).
    """
    if not isinstance(inputs, RateInputs):
        raise InvalidParameterError("main_rate expects RateInputs")
    m, gamma, R, c0 = inputs.m, inputs.gamma, inputs.R, inputs.c0
    sm = math.sqrt(m)
    # written as a ratio of ratios so gamma up to 1e12 stays finite
    s = sm + R + gamma
    x = (gamma / s) * (sm / s) / c0
    lam = sm * math.log1p(x)
    if regime is None:
        regime = _regime_for(R)
    elif not math.isclose(regime.value, R, rel_tol=0, abs_tol=1e-15 * max(1.0, R)):
        raise InvalidParameterError("regime value does not match inputs.R")
    return RateResult(lam=lam, inputs=inputs, regime=regime)


def optimal_gamma(m: float) -> float:
    """Friction ``sqrt(m)`` optimising the convex-case rate."""
    return math.sqrt(_positive("m", m))


def optimal_gamma_general(m: float, R: float) -> float:
    """Maximiser ``sqrt(m) + R`` of :func:`main_rate` in gamma."""
    m = _positive("m", m)
    if not (R >= 0 and math.isfinite(R)):
        raise InvalidParameterError(f"R must be finite and >= 0, got {R}")
    return math.sqrt(m) + R


def rate_at_optimal_gamma(m: float, c0: float = DEFAULT_C0) -> RateResult:
    """Convex rate at ``gamma = sqrt(m)``: ``sqrt(m) log(1 + 1/(4 c0))``."""
    m = _positive("m", m)
    c0 = _positive("c0", c0)
    inputs = RateInputs(m=m, gamma=math.sqrt(m), R=0.0, c0=c0)
    lam = math.sqrt(m) * math.log1p(1.0 / (4.0 * c0))
    return RateResult(lam=lam, inputs=inputs, regime=RegimeR(0.0, Regime.CONVEX))


def overdamped_rate(m: float) -> float:
    """L2 rate of the overdamped dynamics, equal to the Poincare constant."""
    return _positive("m", m)


def gamma_sweep(
    m: float, R: float, c0: float, gamma_grid: Sequence[float]
) -> list[tuple[float, float]]:
    """``[(gamma, main_rate)]`` in grid order."""
    grid = list(gamma_grid)
    if not grid:
        raise InvalidParameterError("gamma_grid must be non-empty")
    return [(float(g), main_rate(RateInputs(m=m, gamma=g, R=R, c0=c0)).lam) for g in grid]


def divergence_bounds(chi2: float) -> tuple[float, float]:
    """Relative-entropy and total-variation bounds implied by a chi^2 value.

    Uses ``TV / sqrt(2) <= sqrt(KL) <= sqrt(chi^2)`` together with the
    trivial ``TV <= 2``. A chi^2 decaying at rate ``2 lambda`` therefore
    gives a TV bound decaying at rate ``lambda``.
    """
    try:
        chi2 = float(chi2)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"chi2 must be a real number, got {chi2!r}") from None
    if not chi2 >= 0 or math.isnan(chi2):
        raise InvalidParameterError(f"chi2 must be >= 0, got {chi2}")
    return chi2, min(2.0, math.sqrt(2.0) * math.sqrt(chi2))
