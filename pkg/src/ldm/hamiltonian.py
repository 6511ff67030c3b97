"""Discrete 1-D periodic Hamiltonians ``H = -1/2 Laplacian + V``.

The kinetic part is the second-order central difference on a uniform
periodic grid, so ``H`` is tridiagonal with cyclic corners and lives in
``B_1``.  Grid points sit at ``x_i = (i + 1) * h`` for ``i = 0..n-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .banded import BandedSymMatrix
from .errors import ParameterError

__all__ = [
    "DomainSpec",
    "PotentialSpec",
    "build_hamiltonian",
    "default_centers",
    "grid",
    "kp_potential",
]


def default_centers(n_at: int, length: float = 100.0) -> list[float]:
    """Well centres ``x_j = L * j / (n_at + 1)``, ``j = 1..n_at``."""
    return [length * j / (n_at + 1) for j in range(1, n_at + 1)]


@dataclass(frozen=True)
class DomainSpec:
    L: float = 100.0
    n: int = 400

    def __post_init__(self):
        if self.n < 1 or self.L <= 0:
            raise ParameterError(f"invalid domain L={self.L}, n={self.n}")

    @property
    def h(self) -> float:
        return self.L / self.n


@dataclass(frozen=True)
class PotentialSpec:
    """Sum of inverted Gaussian wells, or the free (zero) potential."""

    kind: str = "kronig_penney"
    V0: float = 2.0
    delta: float = 3.0
    N_at: int = 10
    centers: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in ("free", "kronig_penney"):
            raise ParameterError(f"unknown potential kind {self.kind!r}")
        if self.kind == "kronig_penney":
            if self.delta <= 0:
                raise ParameterError("delta must be positive")
            if self.V0 < 0:
                raise ParameterError("V0 must be non-negative")
            if self.centers is None:
                object.__setattr__(self, "centers", tuple(default_centers(self.N_at)))
            else:
                object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
            if len(self.centers) != self.N_at:
                raise ParameterError(f"N_at={self.N_at} but {len(self.centers)} centers given")

    @classmethod
    def for_domain(cls, dom: DomainSpec, **kw) -> "PotentialSpec":
        """Potential with centres scaled to the domain length."""
        n_at = kw.get("N_at", 10)
        if kw.get("kind", "kronig_penney") == "kronig_penney" and kw.get("centers") is None:
            kw["centers"] = tuple(default_centers(n_at, dom.L))
        return cls(**kw)


def kp_potential(x, spec: PotentialSpec):
    """``V(x) = -V0 * sum_j exp(-(x - x_j)^2 / delta^2)``; zero for the free kind."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "free":
        return np.zeros_like(x)
    c = np.asarray(spec.centers, dtype=float)
    out = -spec.V0 * np.exp(-((x[..., None] - c) ** 2) / spec.delta**2).sum(axis=-1)
    return out if out.ndim else float(out)


def grid(dom: DomainSpec) -> np.ndarray:
    return (np.arange(dom.n) + 1) * dom.h


def build_hamiltonian(dom: DomainSpec, pot: PotentialSpec) -> BandedSymMatrix:
    if dom.n < 3:
        raise ParameterError("need at least 3 grid points for the periodic stencil")
    h = dom.h
    bands = np.empty((2, dom.n))
    bands[0] = 1.0 / h**2 + kp_potential(grid(dom), pot)
    bands[1] = -0.5 / h**2
    return BandedSymMatrix(bands)
