"""Chebyshev approximation of scalar functions and of banded matrix functions.

A function ``f`` on ``[a, b]`` is interpolated at the ``m + 1`` Chebyshev
points of the second kind after the affine map ``s(y) = 2 (y - a)/(b - a) - 1``.
Matrix functions are evaluated with the Clenshaw recurrence, where every
intermediate is truncated to a working band ``w_work`` and the result to
``w_out``; with ``w_work >= m * w`` the recurrence is exact before the final
truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .banded import (
    BandedSymMatrix,
    SpectralInterval,
    band_multiply,
    power_method_extremes,
    scalar_shift_diag,
    truncate,
)
from .dense_reference import fermi_dirac
from .errors import ParameterError

__all__ = [
    "ChebyshevApprox",
    "WORK_FACTOR",
    "cheb_eval_matrix",
    "cheb_eval_scalar",
    "cheb_fit",
    "default_w_work",
    "eigen_threshold_cheby",
    "fermi_dirac_cheby",
    "hard_threshold",
    "jackson_kernel",
    "matrix_function_cheby",
]

#: default intermediate band is this multiple of the operand band
WORK_FACTOR = 4

_DEGENERATE = 1e-12


@dataclass(frozen=True)
class ChebyshevApprox:
    coeffs: np.ndarray
    a: float
    b: float

    @property
    def m(self) -> int:
        return len(self.coeffs) - 1

    @property
    def interval(self) -> tuple[float, float]:
        return (self.a, self.b)

    def __call__(self, x):
        return cheb_eval_scalar(self, x)


def hard_threshold(x):
    """``min(max(x, 0), 1)``, the scalar form of eigenvalue thresholding."""
    return np.minimum(np.maximum(x, 0.0), 1.0)


def jackson_kernel(m: int) -> np.ndarray:
    """Jackson damping factors ``g_0..g_m`` for a degree-``m`` expansion."""
    N = m + 1
    k = np.arange(N)
    q = np.pi / (N + 1)
    return ((N - k + 1) * np.cos(q * k) + np.sin(q * k) / np.tan(q)) / (N + 1)


def cheb_fit(f, m: int, a: float = -1.0, b: float = 1.0, jackson: bool = False) -> ChebyshevApprox:
    """Degree-``m`` Chebyshev interpolant of ``f`` on ``[a, b]``."""
    if m < 1:
        raise ParameterError("degree must be at least 1")
    if not b > a:
        raise ParameterError(f"empty interval [{a}, {b}]")
    t = np.cos(np.pi * np.arange(m + 1) / m)
    y = np.asarray(f(0.5 * (b - a) * t + 0.5 * (a + b)), dtype=float)
    c = scipy.fft.dct(y, type=1) / m
    c[0] *= 0.5
    c[-1] *= 0.5
    if jackson:
        c = c * jackson_kernel(m)
    return ChebyshevApprox(c, float(a), float(b))


def _to_unit(approx: ChebyshevApprox, x):
    return (2.0 * np.asarray(x, dtype=float) - (approx.a + approx.b)) / (approx.b - approx.a)


def cheb_eval_scalar(approx: ChebyshevApprox, x):
    """Clenshaw evaluation of the series at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    span = approx.b - approx.a
    if np.any((x < approx.a - 1e-12 * span) | (x > approx.b + 1e-12 * span)):
        warnings.warn("evaluating Chebyshev approximation outside its interval", stacklevel=2)
    t = _to_unit(approx, x)
    c = approx.coeffs
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    for ck in c[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + ck, b1
    out = t * b1 - b2 + c[0]
    return out if out.ndim else float(out)


def default_w_work(n: int, w_in: int, w_out: int) -> int:
    return min(WORK_FACTOR * max(w_in, w_out, 1), n // 2)


def cheb_eval_matrix(
    approx: ChebyshevApprox,
    M: BandedSymMatrix,
    w_out: int | None = None,
    w_work: int | None = None,
) -> BandedSymMatrix:
    """Evaluate the series at the banded matrix ``M``.

    Intermediates are truncated to ``w_work`` (default
    ``min(4 * max(w, w_out), n // 2)``) and the result to ``w_out``
    (default ``M.w``).
    """
    n = M.n
    w_out = M.w if w_out is None else w_out
    if not 0 <= w_out <= n // 2:
        raise ParameterError(f"w_out={w_out} outside [0, {n // 2}]")
    c = approx.coeffs
    if approx.b - approx.a < _DEGENERATE:
        return BandedSymMatrix.identity(n, w_out, float(c[0]))
    if w_work is None:
        w_work = default_w_work(n, M.w, w_out)
    w_work = min(max(w_work, w_out), n // 2)

    scale = 2.0 / (approx.b - approx.a)
    S = scalar_shift_diag(M * scale, -(approx.a + approx.b) / (approx.b - approx.a))
    b1 = BandedSymMatrix.zeros(n, 0)
    b2 = BandedSymMatrix.zeros(n, 0)
    for ck in c[:0:-1]:
        b0 = scalar_shift_diag(2.0 * band_multiply(S, b1, w_work) - b2, ck)
        b1, b2 = b0, b1
    out = scalar_shift_diag(band_multiply(S, b1, w_out) - truncate(b2, min(b2.w, w_out)), c[0])
    return truncate(out, w_out)


def matrix_function_cheby(
    f,
    M: BandedSymMatrix,
    m: int,
    w_out: int | None = None,
    w_work: int | None = None,
    interval: SpectralInterval | tuple | None = None,
    jackson: bool = False,
    seed: int = 0,
    margin: float = 0.05,
) -> BandedSymMatrix:
    """Approximate ``f(M)`` in ``B_{w_out}`` by a degree-``m`` Chebyshev polynomial.

    The spectral interval is estimated by :func:`power_method_extremes`
    unless given.
    """
    if interval is None:
        interval = power_method_extremes(M, margin=margin, seed=seed)
    a, b = float(interval[0]), float(interval[1])
    w_out = M.w if w_out is None else w_out
    if b - a < _DEGENERATE:
        value = float(np.asarray(f(np.array([0.5 * (a + b)])))[0])
        return BandedSymMatrix.identity(M.n, w_out, value)
    approx = cheb_fit(f, m, a, b, jackson=jackson)
    return cheb_eval_matrix(approx, M, w_out=w_out, w_work=w_work)


def eigen_threshold_cheby(P: BandedSymMatrix, m_et: int, **kw) -> BandedSymMatrix:
    """Linear-scaling approximation of clamping the spectrum of ``P`` to ``[0, 1]``."""
    return matrix_function_cheby(hard_threshold, P, m_et, **kw)


def fermi_dirac_cheby(
    Y: BandedSymMatrix, beta: float, m_fd: int, w_out: int | None = None, **kw
) -> BandedSymMatrix:
    """Linear-scaling approximation of ``(I + exp(beta Y))^{-1}``."""
    if beta <= 0:
        raise ParameterError("beta must be positive")
    return matrix_function_cheby(lambda x: fermi_dirac(x, beta), Y, m_fd, w_out=w_out, **kw)
