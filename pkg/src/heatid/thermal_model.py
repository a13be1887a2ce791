"""Lumped-element thermal model.

Units are fixed throughout the package: temperatures in degC, heat flows in W,
heat capacities in J/K, conductances in W/K, time in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class LumpedThermalModel:
    """D lumped components exchanging heat by conduction and convection.

    heat_capacity holds m_i * c_p,i (the diagonal of M). conductance is the
    graph-Laplacian conductance matrix K (symmetric, non-negative off-diagonal,
    zero row sums).
    """

    heat_capacity: np.ndarray
    conductance: np.ndarray
    h_ambient: float
    surface_area: np.ndarray

    def __post_init__(self):
        cap = np.atleast_1d(np.asarray(self.heat_capacity, dtype=float))
        K = np.atleast_2d(np.asarray(self.conductance, dtype=float))
        area = np.atleast_1d(np.asarray(self.surface_area, dtype=float))
        d = cap.shape[0]
        if cap.ndim != 1 or d < 1:
            raise ValueError("heat_capacity must be a non-empty vector")
        if K.shape != (d, d):
            raise ValueError(f"conductance must be {d}x{d}, got {K.shape}")
        if area.shape != (d,):
            raise ValueError(f"surface_area must have length {d}, got {area.shape}")
        if np.any(cap <= 0):
            raise ValueError("heat_capacity entries must be strictly positive")
        if np.any(area <= 0):
            raise ValueError("surface_area entries must be strictly positive")
        if not self.h_ambient >= 0:
            raise ValueError("h_ambient must be non-negative")
        if not np.allclose(K, K.T, rtol=0.0, atol=KROW_SUM_TOL):
            raise ValueError("conductance matrix must be symmetric")
        off = K - np.diag(np.diag(K))
        if np.any(off < 0):
            raise ValueError("conductance off-diagonal entries must be >= 0")
        if np.any(np.abs(K.sum(axis=1)) > KROW_SUM_TOL):
            raise ValueError("conductance rows must sum to zero")
        for name, arr in (("heat_capacity", cap), ("conductance", K), ("surface_area", area)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "h_ambient", float(self.h_ambient))

    @property
    def n_components(self) -> int:
        return self.heat_capacity.shape[0]

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.heat_capacity)

    @property
    def M_inv(self) -> np.ndarray:
        return np.diag(1.0 / self.heat_capacity)

    @classmethod
    def chain(cls, heat_capacity, couplings, h_ambient, surface_area) -> "LumpedThermalModel":
        """Components in series; ``couplings[i]`` links component i and i+1."""
        return cls(heat_capacity, chain_conductance(couplings), h_ambient, surface_area)


def chain_conductance(couplings) -> np.ndarray:
    """Laplacian conductance matrix for a chain of components.

    >>> chain_conductance([10.0, 10.0])
    array([[-10.,  10.,   0.],
           [ 10., -20.,  10.],
           [  0.,  10., -10.]])
    """
    k = np.asarray(couplings, dtype=float)
    d = k.shape[0] + 1
    K = np.zeros((d, d))
    for i, kij in enumerate(k):
        K[i, i + 1] = K[i + 1, i] = kij
        K[i, i] -= kij
        K[i + 1, i + 1] -= kij
    return K


@dataclass(frozen=True)
class ContinuousThermalMatrices:
    F: np.ndarray
    G: np.ndarray


def build_continuous_matrices(model: LumpedThermalModel) -> ContinuousThermalMatrices:
    """F = K - diag(h_a a) and G = [h_a a | I].

    M is deliberately not inverted here; that happens when the augmented
    system is assembled.
    """
    ha = model.h_ambient * model.surface_area
    F = model.conductance - np.diag(ha)
    G = np.hstack([ha[:, None], np.eye(model.n_components)])
    return ContinuousThermalMatrices(F=F, G=G)


def true_convection_surrogate(T_i, T_a):
    """Cubic ground-truth nonlinear convection, (T_a - T_i)**3 / 100 in W."""
    return (np.asarray(T_a) - np.asarray(T_i)) ** 3 / 100.0
