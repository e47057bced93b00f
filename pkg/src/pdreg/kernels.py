"""Univariate smoothing kernels and the reflected spectral surrogate.

The surrogate distribution on [0, inf) is a kernel mixture centered at the
pseudo data v_1..v_m with every kernel reflected about the origin, so no
probability mass leaks to negative frequencies.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .specfun import norm_cdf

__all__ = [
    "DENSITY_FLOOR",
    "KernelFamily",
    "KernelSpec",
    "PseudoDataset",
    "kernel_density",
    "kernel_sample",
    "surrogate_cdf",
    "surrogate_pdf",
]

# Densities are clamped here before any downstream logarithm, keeping the
# divergence statistic finite when surrogates become disjoint.
DENSITY_FLOOR = 1e-300

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(enum.Enum):
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


# variance of the unit-bandwidth kernel, used by small-argument expansions
KERNEL_VARIANCE = {
    KernelFamily.UNIFORM: 1.0 / 3.0,
    KernelFamily.EPANECHNIKOV: 0.2,
    KernelFamily.GAUSSIAN: 1.0,
}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its bandwidth h > 0."""

    family: KernelFamily
    h: float

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError("bandwidth h must be finite and > 0")


@dataclass(frozen=True)
class PseudoDataset:
    """An ordered set of m non-negative reals specifying a surrogate."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("pseudo data must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("pseudo data values must be finite and >= 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return int(self.values.size)


def unit_density(family: KernelFamily, u):
    """K(u) for the unit-bandwidth kernel."""
    u = np.asarray(u, dtype=float)
    if family is KernelFamily.UNIFORM:
        return np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    if family is KernelFamily.EPANECHNIKOV:
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def unit_cdf(family: KernelFamily, u):
    """Integral of K from -inf to u for the unit-bandwidth kernel."""
    u = np.asarray(u, dtype=float)
    if family is KernelFamily.UNIFORM:
        return np.clip(0.5 * (u + 1.0), 0.0, 1.0)
    if family is KernelFamily.EPANECHNIKOV:
        uc = np.clip(u, -1.0, 1.0)
        return 0.25 * (2.0 + 3.0 * uc - uc**3)
    return norm_cdf(u)


def kernel_density(spec: KernelSpec, t):
    """Scaled kernel K_h(t) = K(t / h) / h."""
    return unit_density(spec.family, np.asarray(t, dtype=float) / spec.h) / spec.h


def kernel_sample(spec: KernelSpec, rng: np.random.Generator, size=None):
    """Draw from the unit-bandwidth kernel (callers scale by h as needed)."""
    n = 1 if size is None else int(size)
    if spec.family is KernelFamily.UNIFORM:
        out = rng.uniform(-1.0, 1.0, size=n)
    elif spec.family is KernelFamily.GAUSSIAN:
        out = rng.standard_normal(n)
    else:
        out = _sample_epanechnikov(rng, n)
    return float(out[0]) if size is None else out


def _sample_epanechnikov(rng: np.random.Generator, n: int) -> np.ndarray:
    # rejection against the uniform envelope on [-1, 1]; acceptance rate 2/3
    out = np.empty(n)
    filled = 0
    while filled < n:
        want = n - filled
        u = rng.uniform(-1.0, 1.0, size=max(8, int(1.6 * want)))
        accept = rng.uniform(0.0, 1.0, size=u.size) <= (1.0 - u * u)
        got = u[accept][:want]
        out[filled : filled + got.size] = got
        filled += got.size
    return out


def surrogate_cdf(pseudo: PseudoDataset, spec: KernelSpec, u):
    """Distribution function of the reflected kernel mixture, for u >= 0."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0):
        raise ValueError("surrogate_cdf requires u >= 0")
    v = pseudo.values
    h = spec.h
    # int_0^u [K_h(t - v) + K_h(t + v)] dt = F((u-v)/h) + F((u+v)/h) - 1
    lo = unit_cdf(spec.family, (arr[..., None] - v) / h)
    hi = unit_cdf(spec.family, (arr[..., None] + v) / h)
    out = np.mean(lo + hi - 1.0, axis=-1)
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out


def surrogate_pdf(pseudo: PseudoDataset, spec: KernelSpec, u):
    """Density of the reflected kernel mixture, clamped below at DENSITY_FLOOR."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0):
        raise ValueError("surrogate_pdf requires u >= 0")
    v = pseudo.values
    dens = np.mean(
        kernel_density(spec, arr[..., None] - v) + kernel_density(spec, arr[..., None] + v),
        axis=-1,
    )
    out = np.maximum(dens, DENSITY_FLOOR)
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out
