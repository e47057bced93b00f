"""Regression data container shared by the fitting and selection modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RegressionDataset"]


@dataclass(frozen=True)
class RegressionDataset:
    """n observation pairs: radii (n,) or points (n, d), plus responses (n,)."""

    inputs: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        if x.ndim not in (1, 2) or x.shape[0] < 1:
            raise ValueError("inputs must be a non-empty (n,) or (n, d) array")
        if y.shape != (x.shape[0],):
            raise ValueError("responses must be shaped (n,)")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("data must be finite")
        if x.ndim == 1 and np.any(x < 0):
            raise ValueError("radial inputs must be >= 0")
        x = x.copy()
        y = y.copy()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def dim(self) -> int:
        return 1 if self.inputs.ndim == 1 else int(self.inputs.shape[1])

    @property
    def radii(self) -> np.ndarray:
        """Radial view of the inputs: |x_i| for vector data, x_i as is otherwise."""
        if self.inputs.ndim == 1:
            return self.inputs
        return np.linalg.norm(self.inputs, axis=1)

    def subset(self, idx) -> "RegressionDataset":
        return RegressionDataset(self.inputs[idx], self.responses[idx])
