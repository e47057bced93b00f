"""k-fold cross-validation over a (bandwidth, pseudo-data-size) grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import idea
from .datasets import RegressionDataset
from .estimators import EstimatorKind, EstimatorSpec

__all__ = ["CvConfig", "CvResult", "cross_validate", "kfold_split"]

# grids wide enough to reach every operating point used by the bundled
# experiment scenarios
DEFAULT_H_GRID = (0.01, 0.02, 0.05, 0.1, 0.16, 0.2, 0.5, 1.0)
DEFAULT_M_GRID = tuple(range(1, 11))


@dataclass(frozen=True)
class CvConfig:
    k: int = 5
    h_grid: tuple = DEFAULT_H_GRID
    m_grid: tuple = DEFAULT_M_GRID
    seed: int = 0
    replications: int = 1
    idea_max_iters: int = 200

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("fold count k must be >= 2")
        if len(self.h_grid) == 0 or len(self.m_grid) == 0:
            raise ValueError("hyperparameter grids must be non-empty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        # sorted grids make the tie-break (smaller m, then smaller h) well defined
        object.__setattr__(self, "h_grid", tuple(sorted(float(h) for h in self.h_grid)))
        object.__setattr__(self, "m_grid", tuple(sorted(int(m) for m in self.m_grid)))


@dataclass(frozen=True)
class CvResult:
    """Validation-MSE table (h, m, mean_mse) and the chosen cell."""

    table: tuple
    chosen_h: float
    chosen_m: int

    def mean_mse(self, h: float, m: int) -> float:
        for th, tm, mse in self.table:
            if th == h and tm == m:
                return mse
        raise KeyError((h, m))


def kfold_split(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random partition of range(n) into k folds whose sizes differ by <= 1."""
    if n < k:
        raise ValueError(f"cannot split {n} observations into {k} folds")
    perm = rng.permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, k)]


def cross_validate(
    dataset: RegressionDataset,
    spec_template: EstimatorSpec,
    config: CvConfig,
) -> CvResult:
    """Grid search by k-fold CV: fit on k-1 folds, score MSE on the held-out fold.

    Every (h, m, fold, replication) combination runs with its own derived
    seed, so cells are order-independent and the sweep is reproducible.
    A cell whose fit fails is recorded as +inf instead of aborting.
    Ties break toward smaller m, then smaller h.
    """
    folds = kfold_split(dataset.n, config.k, np.random.default_rng(config.seed))
    all_idx = np.arange(dataset.n)

    rows = []
    best = None
    for mi, m in enumerate(config.m_grid):
        for hi, h in enumerate(config.h_grid):
            total = 0.0
            count = 0
            failed = False
            for rep in range(config.replications):
                for fi, val_idx in enumerate(folds):
                    train_idx = np.setdiff1d(all_idx, val_idx, assume_unique=True)
                    cell_seed = np.random.SeedSequence(
                        entropy=config.seed, spawn_key=(hi, mi, fi, rep)
                    ).generate_state(1)[0]
                    cfg = idea.IdeaConfig(
                        m=int(m), h=float(h), seed=int(cell_seed),
                        max_iters=config.idea_max_iters,
                    )
                    try:
                        fit, _ = idea.run(dataset.subset(train_idx), spec_template, cfg)
                        val = dataset.subset(val_idx)
                        pred = _predict(fit, val)
                        resid = val.responses - pred
                        total += float(resid @ resid) / val.n
                        count += 1
                    except (RuntimeError, ValueError, np.linalg.LinAlgError):
                        failed = True
                        break
                if failed:
                    break
            mse = math.inf if failed else total / count
            rows.append((float(h), int(m), mse))
            if best is None or mse < best[0]:
                best = (mse, int(m), float(h))
    return CvResult(table=tuple(rows), chosen_h=best[2], chosen_m=best[1])


def _predict(fit, val: RegressionDataset) -> np.ndarray:
    if fit.spec.kind is EstimatorKind.GENERAL:
        return fit(val.inputs)
    return fit(val.radii)
