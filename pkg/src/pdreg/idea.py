"""Iterated density estimation evolutionary optimizer for pseudo data.

The optimizer maintains a population of candidate pseudo datasets, scores
each by the mean squared error of the induced estimator on the training
data, keeps the best fraction, rebuilds the spectral surrogate from the
merged survivors, and refills the population by a smoothed bootstrap from
that surrogate.  It stops once the divergence between consecutive
surrogates has stayed small for a run of iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .datasets import RegressionDataset
from .estimators import (
    EstimatorKind,
    EstimatorSpec,
    FittedEstimator,
    PseudoDataset,
    VectorPseudoDataset,
    general_evaluator,
    isotropic_evaluator,
    monotone_evaluator,
)
from .kernels import DENSITY_FLOOR, KernelFamily, KernelSpec, kernel_sample, surrogate_pdf

__all__ = [
    "IdeaConfig",
    "IdeaTrace",
    "IterationRecord",
    "Population",
    "initialize",
    "kl_step",
    "objective",
    "replace",
    "run",
    "select",
]


@dataclass(frozen=True)
class IdeaConfig:
    """Hyperparameters of one optimizer run.

    m: pseudo data size per candidate; h: kernel bandwidth; l: population
    size (defaults to 10*m); tau: acceptance rate.  Termination fires when
    the surrogate divergence stays below kl_threshold for kl_patience
    consecutive iterations, or at max_iters.
    """

    m: int
    h: float
    l: int | None = None
    tau: float = 0.1
    kl_threshold: float = 1e-3
    kl_patience: int = 5
    max_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.l is None:
            object.__setattr__(self, "l", 10 * self.m)
        if self.m < 1 or self.l < 1:
            raise ValueError("m and l must be >= 1")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must lie in (0, 1]")
        if self.n_selected < 1:
            raise ValueError("floor(tau * l) must be >= 1")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError("h must be finite and > 0")
        if self.kl_patience < 1 or self.max_iters < 1:
            raise ValueError("kl_patience and max_iters must be >= 1")

    @property
    def n_selected(self) -> int:
        return int(self.tau * self.l + 1e-9)


@dataclass
class Population:
    """Candidate pseudo datasets with their objective scores (NaN = unscored)."""

    datasets: list
    scores: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.datasets) != self.scores.size:
            raise ValueError("datasets and scores lengths disagree")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    obj_min: float
    obj_selected_max: float
    obj_mean: float
    obj_max: float
    d_kl: float


@dataclass
class IdeaTrace:
    """Per-iteration objective summaries plus the termination outcome."""

    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_objective(self) -> float:
        return self.records[-1].obj_min if self.records else math.nan


def initialize(config: IdeaConfig, rng: np.random.Generator, dim: int | None = None) -> Population:
    """Draw the starting population: every pseudo value i.i.d. Exp(1).

    dim selects vector-valued pseudo data for the general estimator kind.
    """
    if dim is None:
        draws = rng.exponential(1.0, size=(config.l, config.m))
        datasets = [PseudoDataset(row) for row in draws]
    else:
        draws = rng.exponential(1.0, size=(config.l, config.m, dim))
        datasets = [VectorPseudoDataset(row) for row in draws]
    return Population(datasets, np.full(config.l, np.nan), iteration=1)


def objective(dataset: RegressionDataset, spec: EstimatorSpec, pseudo) -> float:
    """Mean squared error of the estimator induced by one pseudo dataset."""
    evaluator = _make_evaluator(dataset, spec)
    return _score(evaluator, pseudo.values, dataset.responses)


def _make_evaluator(dataset: RegressionDataset, spec: EstimatorSpec):
    if spec.kind is EstimatorKind.GENERAL:
        if dataset.dim != spec.dim:
            raise ValueError("dataset dimension does not match the general spec")
        return general_evaluator(spec, dataset.inputs)
    if spec.kind is EstimatorKind.ISOTROPIC:
        return isotropic_evaluator(spec, dataset.radii)
    return monotone_evaluator(spec, dataset.radii)


def _score(evaluator, values: np.ndarray, responses: np.ndarray) -> float:
    fitted = evaluator(values)
    if not np.all(np.isfinite(fitted)):
        raise RuntimeError(f"estimator evaluation is not finite for pseudo data {values!r}")
    resid = responses - fitted
    return float(resid @ resid) / responses.size


def select(pop: Population, tau: float):
    """The floor(tau*l) best datasets (stable order) and their merged values."""
    if np.any(np.isnan(pop.scores)):
        raise ValueError("population must be fully scored before selection")
    count = int(tau * len(pop.datasets) + 1e-9)
    order = np.argsort(pop.scores, kind="stable")[:count]
    selected = [pop.datasets[i] for i in order]
    merged_values = np.concatenate([d.values for d in selected])
    merged = type(selected[0])(merged_values)
    return selected, merged


def replace(
    merged,
    selected: list,
    config: IdeaConfig,
    kernel: KernelSpec,
    rng: np.random.Generator,
    selected_scores: np.ndarray | None = None,
) -> Population:
    """Build the next population: survivors verbatim plus smoothed-bootstrap offspring.

    Each fresh value resamples a merged value and perturbs it by h times a
    unit kernel draw; radial pseudo data are folded back to [0, inf) by
    absolute value, vector pseudo data roam freely.
    """
    n_new = config.l - len(selected)
    source = merged.values
    idx = rng.integers(0, source.shape[0], size=config.m * n_new)
    if isinstance(merged, VectorPseudoDataset):
        dim = source.shape[1]
        noise = rng.standard_normal((config.m * n_new, dim))
        fresh = source[idx] + config.h * noise
        children = [
            VectorPseudoDataset(fresh[i * config.m : (i + 1) * config.m]) for i in range(n_new)
        ]
    else:
        noise = kernel_sample(kernel, rng, size=config.m * n_new)
        fresh = np.abs(source[idx] + config.h * noise)
        children = [
            PseudoDataset(fresh[i * config.m : (i + 1) * config.m]) for i in range(n_new)
        ]
    datasets = list(selected) + children
    scores = np.full(config.l, np.nan)
    if selected_scores is not None:
        scores[: len(selected)] = selected_scores
    return Population(datasets, scores)


def kl_step(prev_merged, curr_merged, kernel: KernelSpec) -> float:
    """Average log density ratio of the current to the previous surrogate.

    Both densities are evaluated at the previous step's merged pseudo
    values; the density floor keeps the result finite for disjoint sets.
    """
    pts = prev_merged.values
    if isinstance(prev_merged, VectorPseudoDataset):
        curr = _gaussian_mixture_logpdf(pts, curr_merged.values, kernel.h)
        prev = _gaussian_mixture_logpdf(pts, prev_merged.values, kernel.h)
        return float(np.mean(curr - prev))
    curr = surrogate_pdf(curr_merged, kernel, pts)
    prev = surrogate_pdf(prev_merged, kernel, pts)
    return float(np.mean(np.log(curr) - np.log(prev)))


def _gaussian_mixture_logpdf(points: np.ndarray, centers: np.ndarray, h: float) -> np.ndarray:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    dim = points.shape[1]
    norm = (2.0 * math.pi * h * h) ** (0.5 * dim)
    dens = np.exp(-0.5 * d2 / (h * h)).mean(axis=1) / norm
    return np.log(np.maximum(dens, DENSITY_FLOOR))


def run(dataset: RegressionDataset, spec: EstimatorSpec, config: IdeaConfig):
    """Full optimizer loop; returns the fitted estimator and its trace.

    The returned estimator is built from the merged pseudo data of the
    final selection (size m * floor(tau*l)); the trace flags whether the
    divergence criterion fired before max_iters.
    """
    rng = np.random.default_rng(config.seed)
    kernel = KernelSpec(spec.kernel.family, config.h)
    work_spec = dc_replace(spec, kernel=kernel)
    evaluator = _make_evaluator(dataset, work_spec)
    y = dataset.responses

    dim = work_spec.dim if work_spec.kind is EstimatorKind.GENERAL else None
    pop = initialize(config, rng, dim=dim)

    trace = IdeaTrace()
    prev_merged = None
    merged = None
    streak = 0

    for iteration in range(1, config.max_iters + 1):
        pop.iteration = iteration
        for i in range(config.l):
            if math.isnan(pop.scores[i]):
                pop.scores[i] = _score(evaluator, pop.datasets[i].values, y)

        selected, merged = select(pop, config.tau)
        order = np.argsort(pop.scores, kind="stable")
        sel_scores = pop.scores[order[: config.n_selected]]

        d_kl = kl_step(prev_merged, merged, kernel) if prev_merged is not None else math.nan
        trace.records.append(
            IterationRecord(
                iteration=iteration,
                obj_min=float(pop.scores.min()),
                obj_selected_max=float(sel_scores[-1]),
                obj_mean=float(pop.scores.mean()),
                obj_max=float(pop.scores.max()),
                d_kl=d_kl,
            )
        )
        prev_merged = merged

        hit = math.isinf(config.kl_threshold) or (
            math.isfinite(d_kl) and abs(d_kl) < config.kl_threshold
        )
        streak = streak + 1 if hit else 0
        if streak >= config.kl_patience:
            trace.converged = True
            break
        if iteration == config.max_iters:
            break
        pop = replace(merged, selected, config, kernel, rng, selected_scores=sel_scores)

    fit = FittedEstimator(spec=work_spec, pseudo=merged, sigma2=1.0)
    return fit, trace
