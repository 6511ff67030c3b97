"""Exact spectral machinery at cubic cost.

These routines are the correctness oracle for everything else: the zero
temperature projector, the Fermi-Dirac density matrix with its chemical
potential, and the Frobenius projection onto ``{0 <= R <= I}``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .banded import BandedSymMatrix
from .errors import DegenerateProblemError, ParameterError

__all__ = [
    "Spectrum",
    "chemical_potential",
    "eig_sym",
    "eigenvalue_threshold",
    "fermi_dirac",
    "fermi_dirac_density_matrix",
    "projector_density_matrix",
]


class Spectrum(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _dense(M) -> np.ndarray:
    if isinstance(M, BandedSymMatrix):
        return M.to_dense()
    return np.asarray(M, dtype=float)


def eig_sym(M, check: bool = True) -> Spectrum:
    """Full eigendecomposition with ascending eigenvalues."""
    M = _dense(M)
    if check:
        scale = max(1.0, float(np.abs(M).max(initial=0.0)))
        if np.abs(M - M.T).max(initial=0.0) > 1e-10 * scale:
            raise ParameterError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(M)
    return Spectrum(vals, vecs)


def projector_density_matrix(H, N: int, spectrum: Spectrum | None = None) -> np.ndarray:
    """Projector onto the ``N`` lowest eigenvectors of ``H``."""
    lam, phi = spectrum if spectrum is not None else eig_sym(H)
    n = len(lam)
    if not 0 <= N <= n:
        raise ParameterError(f"N={N} outside [0, {n}]")
    if 0 < N < n:
        tol_gap = 1e-10 * max(1.0, abs(lam[-1]))
        if lam[N] - lam[N - 1] < tol_gap:
            raise DegenerateProblemError(
                f"lambda_N = {lam[N - 1]:.6g} and lambda_N+1 = {lam[N]:.6g} are degenerate"
            )
    occ = phi[:, :N]
    return occ @ occ.T


def fermi_dirac(x, beta: float):
    """``1 / (1 + exp(beta * x))`` without overflow for large ``|beta * x|``."""
    t = beta * np.asarray(x, dtype=float)
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, e / (1.0 + e), 1.0 / (1.0 + e))


def _log_fd(x, beta: float):
    """``log fermi_dirac(x, beta)``, finite even where the occupation underflows."""
    return -np.logaddexp(0.0, beta * x)


def chemical_potential(lam, beta: float, N: float, max_iter: int = 60) -> float:
    """Solve ``sum_i fermi_dirac(lam_i - mu, beta) = N`` for ``mu`` by bisection.

    For integer ``N`` the equivalent balance "electrons above state N equal
    holes below it" is compared in log space, which keeps the root
    resolvable when both sides underflow at large ``beta``.
    """
    lam = np.sort(np.asarray(lam, dtype=float))
    n = lam.size
    if not 0 < N < n:
        raise ParameterError(f"N={N} must lie strictly between 0 and n={n}")
    if beta <= 0:
        raise ParameterError("beta must be positive")

    if float(N).is_integer():
        k = int(N)

        def excess(mu):
            above = logsumexp(_log_fd(lam[k:] - mu, beta))
            holes = logsumexp(_log_fd(mu - lam[:k], beta))
            return above - holes
    else:

        def excess(mu):
            return fermi_dirac(lam - mu, beta).sum() - N

    lo = lam[0] - 10.0 / beta - 1.0
    hi = lam[-1] + 10.0 / beta + 1.0
    # excess increases with mu
    while excess(lo) > 0:
        lo -= hi - lo
    while excess(hi) < 0:
        hi += hi - lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fermi_dirac_density_matrix(H, beta: float, N: float, spectrum: Spectrum | None = None):
    """``[I + exp(beta (H - mu))]^{-1}`` with ``mu`` fixed by ``tr P = N``.

    Returns ``(P, mu)``.
    """
    lam, phi = spectrum if spectrum is not None else eig_sym(H)
    mu = chemical_potential(lam, beta, N)
    rho = fermi_dirac(lam - mu, beta)
    return (phi * rho) @ phi.T, mu


def eigenvalue_threshold(M) -> np.ndarray:
    """Clamp the spectrum of ``M`` to ``[0, 1]`` keeping its eigenvectors."""
    lam, V = eig_sym(M, check=False)
    return (V * np.clip(lam, 0.0, 1.0)) @ V.T
