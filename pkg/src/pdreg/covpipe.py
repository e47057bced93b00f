"""Covariance-function estimation for point-referenced data, plus the
synthetic generators used by the bundled experiments.

The pipeline starts from classical moment point estimates of the covariance,
fits the shape-constrained unit-variance curve with the evolutionary
optimizer, and alternates that fit with a closed-form least-squares update
of the variance scale.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import idea, modelselect
from .datasets import RegressionDataset
from .estimators import EstimatorKind, EstimatorSpec, FittedEstimator
from .kernels import KernelFamily, KernelSpec

__all__ = [
    "CovFitTrace",
    "CovPointSet",
    "SpatialField",
    "TruthFamily",
    "TruthFunction",
    "bin_distances",
    "fit_covariance",
    "fit_covariance_points",
    "generate_regression",
    "matheron_points",
    "rmspe",
    "sigma2_update",
    "simulate_gp",
]

SIGMA2_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# reference curve families
# ---------------------------------------------------------------------------


class TruthFamily(enum.Enum):
    WAVE_REG = "wave-reg"          # sin(2r) / (2r)
    SPHERICAL_REG = "spherical-reg"  # 1 - (12r - r^3)/20 on (0, 2], then 0.2
    WAVE_COV = "wave-cov"          # sin(r) / r
    EXP_COV = "exp-cov"            # exp(-r)
    WAVE_SCALED = "wave"           # sin(cr) / (cr)
    SPHERICAL_SCALED = "spherical"  # 1 - (b/2)(3cr - c^3 r^3) on (0, 1/c], then 1 - b
    EXP_SCALED = "exp"             # exp(-cr)


@dataclass(frozen=True)
class TruthFunction:
    """A reference regression/covariance curve with its parameters."""

    family: TruthFamily
    c: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError("scale c must be finite and > 0")
        if self.family is TruthFamily.SPHERICAL_SCALED and not (0.0 < self.b <= 1.0):
            raise ValueError("spherical height b must lie in (0, 1]")

    def __call__(self, r):
        return truth_eval(self, r)


def truth_eval(fn: TruthFunction, r):
    """Evaluate the reference curve at radius r >= 0 (scalar or array)."""
    arr = np.asarray(r, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise ValueError("r must be >= 0")
    fam = fn.family
    if fam in (TruthFamily.WAVE_REG, TruthFamily.WAVE_COV, TruthFamily.WAVE_SCALED):
        c = {TruthFamily.WAVE_REG: 2.0, TruthFamily.WAVE_COV: 1.0}.get(fam, fn.c)
        out = np.ones_like(arr)
        pos = arr > 0
        out[pos] = np.sin(c * arr[pos]) / (c * arr[pos])
    elif fam in (TruthFamily.SPHERICAL_REG, TruthFamily.SPHERICAL_SCALED):
        if fam is TruthFamily.SPHERICAL_REG:
            b, c = 0.8, 0.5
        else:
            b, c = fn.b, fn.c
        out = np.where(
            arr <= 1.0 / c,
            1.0 - 0.5 * b * (3.0 * c * arr - (c * arr) ** 3),
            1.0 - b,
        )
        out[arr == 0.0] = 1.0
    else:
        c = 1.0 if fam is TruthFamily.EXP_COV else fn.c
        out = np.exp(-c * arr)
    return float(out[0]) if scalar else out.reshape(np.shape(r))


# ---------------------------------------------------------------------------
# fields and point estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpatialField:
    """w distinct locations in R^d with observed field values."""

    locations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if loc.ndim != 2 or loc.shape[0] < 2:
            raise ValueError("locations must be (w, d) with w >= 2")
        if val.shape != (loc.shape[0],):
            raise ValueError("values must be shaped (w,)")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(val))):
            raise ValueError("field data must be finite")
        diffs = loc[:, None, :] - loc[None, :, :]
        dist = np.sqrt((diffs**2).sum(axis=2))
        if np.any(dist[~np.eye(loc.shape[0], dtype=bool)] == 0.0):
            raise ValueError("locations must be pairwise distinct")
        loc = loc.copy()
        val = val.copy()
        loc.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", val)

    @property
    def w(self) -> int:
        return int(self.locations.shape[0])


@dataclass(frozen=True)
class CovPointSet:
    """Moment point estimates (distance, product) for all i < j pairs.

    The sample variance of the field is kept separately; it seeds the
    variance iteration but never enters the curve fit.
    """

    distances: np.ndarray
    products: np.ndarray
    diagonal_variance: float

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        c = np.asarray(self.products, dtype=float)
        if d.ndim != 1 or d.shape != c.shape or d.size < 1:
            raise ValueError("distances and products must be equal-length 1-d arrays")
        d = d.copy()
        c = c.copy()
        d.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "products", c)

    @property
    def count(self) -> int:
        return int(self.distances.size)


def simulate_gp(
    truth: TruthFunction,
    w: int,
    domain,
    rng: np.random.Generator,
) -> SpatialField:
    """Mean-zero Gaussian field at w uniform locations in an axis-aligned box.

    domain is ((x0, x1), (y0, y1), ...); the covariance matrix is factorized
    with an escalating diagonal jitter before sampling.
    """
    if w < 2:
        raise ValueError("w must be >= 2")
    box = np.asarray(domain, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("domain must be ((lo, hi), ...) with hi > lo")
    dim = box.shape[0]
    loc = rng.uniform(box[:, 0], box[:, 1], size=(w, dim))
    diffs = loc[:, None, :] - loc[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    cov = truth_eval(truth, dist)
    chol = _jittered_cholesky(cov)
    values = chol @ rng.standard_normal(w)
    return SpatialField(loc, values)


def _jittered_cholesky(cov: np.ndarray) -> np.ndarray:
    w = cov.shape[0]
    base = np.trace(cov) / w
    jitter = 1e-10 * base
    for _ in range(7):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(w))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > 1e-4 * base:
                break
    raise RuntimeError("covariance factorization failed even with maximal jitter")


def matheron_points(field: SpatialField) -> CovPointSet:
    """Classical moment point estimates for every unordered location pair."""
    z = field.values
    zbar = float(z.mean())
    centered = z - zbar
    i, j = np.triu_indices(field.w, k=1)
    diffs = field.locations[i] - field.locations[j]
    dist = np.sqrt((diffs**2).sum(axis=1))
    prods = centered[i] * centered[j]
    diag_var = float(centered @ centered) / field.w
    return CovPointSet(dist, prods, diag_var)


def bin_distances(points: CovPointSet, bin_width: float) -> CovPointSet:
    """Average the point cloud within fixed-width distance bins."""
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    ids = np.floor(points.distances / bin_width).astype(np.int64)
    uniq, inv = np.unique(ids, return_inverse=True)
    counts = np.bincount(inv)
    mean_d = np.bincount(inv, weights=points.distances) / counts
    mean_c = np.bincount(inv, weights=points.products) / counts
    return CovPointSet(mean_d, mean_c, points.diagonal_variance)


def sigma2_update(
    points: CovPointSet,
    c0: FittedEstimator,
    prev_sigma2: float | None = None,
) -> float:
    """Least-squares variance scale against the unit curve c0.

    Minimizes sum (product - sigma2 * c0(r))^2 in closed form.  A degenerate
    denominator keeps the previous value (with a warning) when one is given.
    """
    curve = c0(points.distances)
    denom = float(curve @ curve)
    if denom <= 0.0 or not math.isfinite(denom):
        if prev_sigma2 is None:
            raise RuntimeError("degenerate unit curve: all values vanish on the data")
        warnings.warn("variance update skipped: degenerate unit curve", RuntimeWarning)
        return prev_sigma2
    est = float(points.products @ curve) / denom
    return max(est, SIGMA2_FLOOR)


@dataclass
class CovFitTrace:
    """Per-round variance estimates and optimizer traces of one covariance fit."""

    sigma2_history: list[float] = field(default_factory=list)
    idea_traces: list[idea.IdeaTrace] = field(default_factory=list)
    chosen_h: float | None = None
    chosen_m: int | None = None

    @property
    def rounds(self) -> int:
        return len(self.idea_traces)


def fit_covariance(
    field: SpatialField,
    kind: EstimatorKind,
    idea_cfg: idea.IdeaConfig,
    cv_cfg: modelselect.CvConfig | None = None,
    outer_iters: int = 3,
    kernel_family: KernelFamily = KernelFamily.GAUSSIAN,
):
    """Covariance estimation from a field realization.

    Extracts the point estimates and alternates a unit-curve fit with the
    variance-scale update; see fit_covariance_points.
    """
    return fit_covariance_points(
        matheron_points(field), kind, idea_cfg,
        cv_cfg=cv_cfg, outer_iters=outer_iters, kernel_family=kernel_family,
    )


def fit_covariance_points(
    points: CovPointSet,
    kind: EstimatorKind,
    idea_cfg: idea.IdeaConfig,
    cv_cfg: modelselect.CvConfig | None = None,
    outer_iters: int = 3,
    kernel_family: KernelFamily = KernelFamily.GAUSSIAN,
):
    """Alternating covariance fit on an existing point-estimate cloud.

    The variance starts at the field's sample variance.  Each round fits the
    unit curve to products/sigma2 and then refreshes sigma2 by least squares
    against the unscaled products; rounds stop early once the relative
    variance change drops below 1e-3.  Returns (FittedEstimator, CovFitTrace)
    with sigma2 folded into the estimator.
    """
    if outer_iters < 1:
        raise ValueError("outer_iters must be >= 1")
    if kind is EstimatorKind.GENERAL:
        raise ValueError("covariance fitting supports isotropic and monotone kinds")
    spec = EstimatorSpec(kind, KernelSpec(kernel_family, idea_cfg.h))
    trace = CovFitTrace()

    sigma2 = max(points.diagonal_variance, SIGMA2_FLOOR)
    trace.sigma2_history.append(sigma2)

    h, m = idea_cfg.h, idea_cfg.m
    if cv_cfg is not None:
        scaled = RegressionDataset(points.distances, points.products / sigma2)
        cv_res = modelselect.cross_validate(scaled, spec, cv_cfg)
        h, m = cv_res.chosen_h, cv_res.chosen_m
        trace.chosen_h, trace.chosen_m = h, m

    fit = None
    for outer in range(outer_iters):
        seed = int(
            np.random.SeedSequence(entropy=idea_cfg.seed, spawn_key=(outer,)).generate_state(1)[0]
        )
        cfg = idea.IdeaConfig(
            m=int(m), h=float(h), tau=idea_cfg.tau,
            kl_threshold=idea_cfg.kl_threshold, kl_patience=idea_cfg.kl_patience,
            max_iters=idea_cfg.max_iters, seed=seed,
        )
        scaled = RegressionDataset(points.distances, points.products / sigma2)
        unit_fit, idea_trace = idea.run(scaled, spec, cfg)
        trace.idea_traces.append(idea_trace)
        new_sigma2 = sigma2_update(points, unit_fit, prev_sigma2=sigma2)
        trace.sigma2_history.append(new_sigma2)
        fit = FittedEstimator(unit_fit.spec, unit_fit.pseudo, sigma2=new_sigma2)
        rel_change = abs(new_sigma2 - sigma2) / max(new_sigma2, SIGMA2_FLOOR)
        sigma2 = new_sigma2
        if rel_change < 1e-3:
            break
    return fit, trace


# ---------------------------------------------------------------------------
# synthetic data and error metrics
# ---------------------------------------------------------------------------


def generate_regression(
    truth: TruthFunction,
    n: int,
    domain: tuple[float, float],
    noise_sd: float,
    rng: np.random.Generator,
) -> RegressionDataset:
    """n noisy observations of the reference curve at uniform radii."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo or lo < 0:
        raise ValueError("domain must satisfy 0 <= lo < hi")
    r = rng.uniform(lo, hi, size=n)
    y = truth_eval(truth, r)
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n)
    return RegressionDataset(r, y)


def rmspe(fit, truth: TruthFunction, test_inputs) -> float:
    """Root mean squared error of the fit against the noise-free curve."""
    r = np.asarray(test_inputs, dtype=float)
    if r.size < 1:
        raise ValueError("test inputs must be non-empty")
    diff = np.asarray(fit(r), dtype=float) - truth_eval(truth, r)
    return float(np.sqrt(np.mean(diff * diff)))
