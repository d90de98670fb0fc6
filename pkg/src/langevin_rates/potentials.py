"""Potentials, their analytic constants, and selection of the constant R.

A potential is a pair of vectorised callbacks (energy, gradient) plus the
constants the convergence estimates depend on:

* ``poincare_m`` -- Poincare constant ``m`` of ``mu_U ~ exp(-U)``,
* ``hessian_lower_K`` -- ``K >= 0`` with ``Hess U >= -K Id``,
* ``growth_M`` -- ``M >= 1`` with ``|Hess U| <= M (1 + |grad U|)``.

``None`` stands for "unknown"; solvers may fill it in later through
:func:`dataclasses.replace` (see :func:`with_poincare`).

Callbacks take arrays of shape ``(..., d)`` and broadcast over the leading
axes; ``energy`` returns shape ``(...)`` and ``gradient`` shape ``(..., d)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .errors import InvalidParameterError, MissingMetadataError

__all__ = [
    "PotentialClass",
    "Regime",
    "PotentialSpec",
    "RegimeR",
    "make_isotropic_quadratic",
    "make_double_well",
    "make_custom",
    "with_poincare",
    "select_R",
    "register_custom_potential",
    "custom_potentials",
    "load_potential",
]


class PotentialClass(str, enum.Enum):
    CONVEX = "Convex"
    HESSIAN_BOUNDED_BELOW = "HessianBoundedBelow"
    GENERAL = "General"


class Regime(str, enum.Enum):
    CONVEX = "Convex"
    HESSIAN_LB = "HessianLB"
    GENERAL = "General"


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable potential with analytic metadata."""

    dimension: int
    energy: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    poincare_m: float | None = None
    hessian_lower_K: float | None = None
    growth_M: float | None = None
    class_tag: PotentialClass = PotentialClass.GENERAL
    name: str = "custom"

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise InvalidParameterError(f"dimension must be a positive integer, got {self.dimension!r}")
        object.__setattr__(self, "class_tag", PotentialClass(self.class_tag))
        if self.poincare_m is not None and not (self.poincare_m > 0 and math.isfinite(self.poincare_m)):
            raise InvalidParameterError(f"poincare_m must be positive, got {self.poincare_m}")
        if self.hessian_lower_K is not None and not (
            self.hessian_lower_K >= 0 and math.isfinite(self.hessian_lower_K)
        ):
            raise InvalidParameterError(f"hessian_lower_K must be >= 0, got {self.hessian_lower_K}")
        if self.growth_M is not None and not (self.growth_M >= 1 and math.isfinite(self.growth_M)):
            raise InvalidParameterError(f"growth_M must be >= 1, got {self.growth_M}")
        if self.class_tag is PotentialClass.CONVEX and self.hessian_lower_K not in (None, 0, 0.0):
            raise InvalidParameterError("a Convex potential must have hessian_lower_K = 0")

    @property
    def is_quadratic(self) -> bool:
        return self.name.startswith("quadratic")

    def metadata(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "d": int(self.dimension),
            "class_tag": self.class_tag.value,
            "m": self.poincare_m,
            "K": self.hessian_lower_K,
            "M": self.growth_M,
        }


@dataclass(frozen=True)
class RegimeR:
    value: float
    regime: Regime

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise InvalidParameterError(f"R must be finite and >= 0, got {self.value}")
        if (self.value == 0) != (self.regime is Regime.CONVEX):
            raise InvalidParameterError("R = 0 exactly when the regime is Convex")


def _check_dimension(d) -> int:
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidParameterError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def make_isotropic_quadratic(m: float, d: int = 1) -> PotentialSpec:
    """``U(x) = m |x|^2 / 2``; convex, Poincare constant exactly ``m``."""
    d = _check_dimension(d)
    if not (m > 0 and math.isfinite(m)):
        raise InvalidParameterError(f"m must be positive, got {m}")
    m = float(m)

    def energy(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * m * np.sum(x * x, axis=-1)

    def gradient(x):
        return m * np.asarray(x, dtype=float)

    return PotentialSpec(
        dimension=d,
        energy=energy,
        gradient=gradient,
        poincare_m=m,
        hessian_lower_K=0.0,
        # the Hessian norm is the constant m, so any M >= max(1, m) works
        growth_M=max(1.0, m),
        class_tag=PotentialClass.CONVEX,
        name=f"quadratic(m={m:g},d={d})",
    )


def make_double_well(d: int = 1) -> PotentialSpec:
    """``U(x) = (|x|^2 - 1)^2`` with ``Hess U >= -4 Id``.

    ``poincare_m`` is left unknown; for ``d = 1`` fill it from
    :func:`langevin_rates.spectral.poincare_fd`. ``growth_M`` is also left
    unknown since no explicit value is available.
    """
    d = _check_dimension(d)

    def energy(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return (r2 - 1.0) ** 2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return 4.0 * (r2 - 1.0) * x

    return PotentialSpec(
        dimension=d,
        energy=energy,
        gradient=gradient,
        poincare_m=None,
        hessian_lower_K=4.0,
        growth_M=None,
        class_tag=PotentialClass.HESSIAN_BOUNDED_BELOW,
        name=f"double_well(d={d})",
    )


def make_custom(
    energy,
    gradient,
    d: int,
    *,
    m: float | None = None,
    K: float | None = None,
    M: float | None = None,
    class_tag: PotentialClass | str = PotentialClass.GENERAL,
    name: str = "custom",
) -> PotentialSpec:
    """Wrap user callbacks; no differentiation is attempted."""
    return PotentialSpec(
        dimension=_check_dimension(d),
        energy=energy,
        gradient=gradient,
        poincare_m=m,
        hessian_lower_K=K,
        growth_M=M,
        class_tag=PotentialClass(class_tag),
        name=name,
    )


def with_poincare(spec: PotentialSpec, m: float) -> PotentialSpec:
    """Return a copy of ``spec`` with its Poincare constant filled in."""
    return replace(spec, poincare_m=float(m))


def select_R(spec: PotentialSpec) -> RegimeR:
    """Smallest admissible R over the regimes whose metadata is known.

    Convex gives 0, a Hessian lower bound ``K`` gives ``sqrt(K)`` and the
    general growth constant gives ``M sqrt(d)``.
    """
    candidates: list[RegimeR] = []
    if spec.class_tag is PotentialClass.CONVEX:
        candidates.append(RegimeR(0.0, Regime.CONVEX))
    if spec.hessian_lower_K is not None:
        K = float(spec.hessian_lower_K)
        if K == 0.0:
            candidates.append(RegimeR(0.0, Regime.CONVEX))
        else:
            candidates.append(RegimeR(math.sqrt(K), Regime.HESSIAN_LB))
    if spec.growth_M is not None:
        candidates.append(RegimeR(float(spec.growth_M) * math.sqrt(spec.dimension), Regime.GENERAL))
    if not candidates:
        if spec.class_tag is PotentialClass.HESSIAN_BOUNDED_BELOW:
            raise MissingMetadataError("hessian_lower_K")
        raise MissingMetadataError("growth_M")
    return min(candidates, key=lambda r: r.value)


_CUSTOM_REGISTRY: dict[str, Callable[..., PotentialSpec]] = {}


def register_custom_potential(name: str, factory: Callable[..., PotentialSpec]) -> None:
    """Register ``factory(**params)`` under ``name`` for JSON documents of kind ``custom``."""
    if not name:
        raise InvalidParameterError("custom potential name must be non-empty")
    _CUSTOM_REGISTRY[name] = factory


def custom_potentials() -> tuple[str, ...]:
    return tuple(sorted(_CUSTOM_REGISTRY))


_DOC_KEYS = {"name", "kind", "m", "d", "K", "M", "params"}


def load_potential(doc: Mapping[str, Any] | str | Path) -> PotentialSpec:
    """Build a potential from ``{"name", "kind", "m", "d", "K", "M"}``.

    ``doc`` may be a mapping, a JSON string or a path to a JSON file.
    ``kind`` is ``quadratic``, ``double_well`` or ``custom``; custom kinds
    are looked up by ``name`` in the registry and receive ``params``.
    """
    if isinstance(doc, Path) or (isinstance(doc, str) and not doc.lstrip().startswith("{")):
        doc = json.loads(Path(doc).read_text())
    elif isinstance(doc, str):
        doc = json.loads(doc)
    doc = dict(doc)
    unknown = set(doc) - _DOC_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown potential keys: {sorted(unknown)}")
    kind = doc.get("kind")
    d = doc.get("d", 1)
    if kind == "quadratic":
        if "m" not in doc:
            raise InvalidParameterError("quadratic potential requires 'm'")
        return make_isotropic_quadratic(float(doc["m"]), d)
    if kind == "double_well":
        spec = make_double_well(d)
        if doc.get("m") is not None:
            spec = with_poincare(spec, float(doc["m"]))
        if doc.get("M") is not None:
            spec = replace(spec, growth_M=float(doc["M"]))
        return spec
    if kind == "custom":
        name = doc.get("name")
        if name not in _CUSTOM_REGISTRY:
            raise InvalidParameterError(
                f"custom potential {name!r} is not registered (known: {list(custom_potentials())})"
            )
        spec = _CUSTOM_REGISTRY[name](**doc.get("params", {}))
        overrides = {
            key: float(doc[src]) for key, src in
            (("poincare_m", "m"), ("hessian_lower_K", "K"), ("growth_M", "M"))
            if doc.get(src) is not None
        }
        return replace(spec, **overrides) if overrides else spec
    raise InvalidParameterError(f"unknown potential kind {kind!r}")
