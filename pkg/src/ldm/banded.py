"""Cyclic banded symmetric matrices.

A matrix in ``B_w`` is stored diagonal-major: ``bands[d, i]`` holds the entry
``M[i, (i + d) % n]`` for ``d = 0..w``.  The sub-diagonals follow from
symmetry, so memory is ``(w + 1) * n`` and every kernel below runs in
``O(n * w)`` (or ``O(n * w_a * w_b)`` for products).
"""

from __future__ import annotations

import contextlib
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "BandedSymMatrix",
    "SpectralInterval",
    "band_axpy",
    "band_multiply",
    "count_operations",
    "cyclic_dist",
    "entrywise_l1",
    "frobenius_norm",
    "power_method_extremes",
    "scalar_shift_diag",
    "trace",
    "truncate",
]


def cyclic_dist(i: int, j: int, n: int) -> int:
    """Distance between grid indices ``i`` and ``j`` on a ring of ``n`` sites."""
    if not (0 <= i < n and 0 <= j < n):
        raise ParameterError(f"indices ({i}, {j}) out of range for n={n}")
    d = abs(i - j)
    return min(d, n - d)


def cyclic_distance_matrix(n: int) -> np.ndarray:
    """``n x n`` integer array of pairwise cyclic distances."""
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(d, n - d)


class _OpCounter:
    def __init__(self):
        self.count = 0


_counters: list[_OpCounter] = []


@contextlib.contextmanager
def count_operations() -> Iterator[_OpCounter]:
    """Count band-element multiply-adds performed by :func:`band_multiply`.

    >>> with count_operations() as ops:
    ...     _ = band_multiply(A, B)       # doctest: +SKIP
    >>> ops.count                         # doctest: +SKIP
    """
    counter = _OpCounter()
    _counters.append(counter)
    try:
        yield counter
    finally:
        _counters.remove(counter)


def _tally(k: int) -> None:
    for c in _counters:
        c.count += k


class BandedSymMatrix:
    """Symmetric ``n x n`` matrix vanishing outside a cyclic band of half-width ``w``."""

    __slots__ = ("bands",)

    def __init__(self, bands):
        bands = np.array(bands, dtype=float, ndmin=2)
        if bands.ndim != 2:
            raise ParameterError("bands must be a 2-d array of shape (w + 1, n)")
        n = bands.shape[1]
        w = bands.shape[0] - 1
        if n < 1 or w > n // 2:
            raise ParameterError(f"band half-width {w} exceeds floor(n/2) for n={n}")
        if n % 2 == 0 and w == n // 2 and n > 0:
            # offset n/2 is stored twice (rows i and i + n/2); keep the copies equal
            half = n // 2
            last = bands[w]
            avg = 0.5 * (last[:half] + last[half:])
            bands[w, :half] = avg
            bands[w, half:] = avg
        self.bands = bands

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, n: int, w: int = 0) -> "BandedSymMatrix":
        return cls(np.zeros((w + 1, n)))

    @classmethod
    def identity(cls, n: int, w: int = 0, scale: float = 1.0) -> "BandedSymMatrix":
        b = np.zeros((w + 1, n))
        b[0] = scale
        return cls(b)

    @classmethod
    def from_diagonals(cls, diagonals) -> "BandedSymMatrix":
        """Build from a list ``[main, super_1, ..., super_w]`` of length-``n`` arrays."""
        return cls(np.vstack([np.asarray(d, dtype=float) for d in diagonals]))

    # -- basic properties ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.bands.shape[1]

    @property
    def w(self) -> int:
        return self.bands.shape[0] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        return self.bands[0].copy()

    def entry(self, i: int, j: int) -> float:
        n = self.n
        d = (j - i) % n
        if d <= self.w:
            return float(self.bands[d, i])
        d = (i - j) % n
        if d <= self.w:
            return float(self.bands[d, j])
        return 0.0

    def copy(self) -> "BandedSymMatrix":
        return BandedSymMatrix(self.bands.copy())

    def to_dense(self) -> np.ndarray:
        n, w = self.n, self.w
        out = np.zeros((n, n))
        rows = np.arange(n)
        for d in range(w, -1, -1):
            cols = (rows + d) % n
            out[rows, cols] = self.bands[d]
            out[cols, rows] = self.bands[d]
        return out

    densify = to_dense

    def widen(self, w: int) -> "BandedSymMatrix":
        """Same matrix stored with (at least) half-width ``w``."""
        if w <= self.w:
            return self
        w = min(w, self.n // 2)
        b = np.zeros((w + 1, self.n))
        b[: self.w + 1] = self.bands
        return BandedSymMatrix(b)

    def offsets(self, width: int | None = None) -> np.ndarray:
        """Array ``F`` of shape ``(2*width + 1, n)`` with ``F[p + width, i] = M[i, i + p]``.

        ``width`` must be below ``n / 2`` so that the signed offsets are distinct.
        """
        width = self.w if width is None else width
        n, k = self.n, min(width, self.w)
        out = np.zeros((2 * width + 1, n))
        out[width: width + k + 1] = self.bands[: k + 1]
        if k:
            # M[i, i - d] = bands[d][i - d]
            out[width - k: width] = _shift_rows(self.bands[1: k + 1], -1, -1)[::-1]
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matvec_operator()(x)

    def matvec_operator(self):
        """Return ``x -> M @ x`` with the gather pattern precomputed, for repeated use."""
        n, w = self.n, self.w
        if 2 * w >= n:
            D = self.to_dense()
            return lambda x: D @ np.asarray(x, dtype=float)
        F = self.offsets()
        idx = (np.arange(n) + np.arange(-w, w + 1)[:, None]) % n
        return lambda x: np.einsum("ki,ki->i", F, np.asarray(x, dtype=float)[idx])

    # -- arithmetic ---------------------------------------------------------

    def _aligned(self, other: "BandedSymMatrix"):
        if not isinstance(other, BandedSymMatrix):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
        w = max(self.w, other.w)
        return self.widen(w).bands, other.widen(w).bands

    def __add__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return BandedSymMatrix(pair[0] + pair[1])

    def __sub__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return BandedSymMatrix(pair[0] - pair[1])

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return BandedSymMatrix(self.bands * float(alpha))

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return BandedSymMatrix(self.bands / float(alpha))

    def __neg__(self):
        return BandedSymMatrix(-self.bands)

    def __matmul__(self, other):
        if isinstance(other, BandedSymMatrix):
            return band_multiply(self, other)
        return self.matvec(other)

    def __repr__(self) -> str:
        return f"BandedSymMatrix(n={self.n}, w={self.w})"


def _as_banded(M) -> BandedSymMatrix:
    if isinstance(M, BandedSymMatrix):
        return M
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return truncate(M, M.shape[0] // 2)


def truncate(M, w: int) -> BandedSymMatrix:
    """Zero every entry with cyclic distance to the diagonal above ``w``.

    This is the Frobenius projection onto ``B_w``.  ``M`` may be a dense
    symmetric array or a :class:`BandedSymMatrix`.
    """
    if isinstance(M, BandedSymMatrix):
        if not 0 <= w <= M.n // 2:
            raise ParameterError(f"band width {w} outside [0, {M.n // 2}]")
        if w >= M.w:
            return M.widen(w) if w > M.w else M.copy()
        return BandedSymMatrix(M.bands[: w + 1].copy())
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if not 0 <= w <= n // 2:
        raise ParameterError(f"band width {w} outside [0, {n // 2}]")
    rows = np.arange(n)
    bands = np.empty((w + 1, n))
    for d in range(w + 1):
        bands[d] = M[rows, (rows + d) % n]
    return BandedSymMatrix(bands)


def band_multiply(A: BandedSymMatrix, B: BandedSymMatrix, w_cap: int | None = None) -> BandedSymMatrix:
    """Symmetric part of ``A @ B`` restricted to half-width ``min(w_a + w_b, w_cap)``.

    The result is ``(A B + B A) / 2`` projected onto the band, which equals
    ``A @ B`` whenever ``A`` and ``B`` commute (the polynomial-in-one-matrix
    setting of the Chebyshev recurrence).  Averaging the two triangles keeps
    rounding errors from being amplified along a long recurrence.
    """
    if A.n != B.n:
        raise DimensionError(f"dimension mismatch: {A.n} vs {B.n}")
    n, wa, wb = A.n, A.w, B.w
    wc = wa + wb if w_cap is None else min(wa + wb, w_cap)
    if wc < 0:
        raise ParameterError("w_cap must be non-negative")
    wc = min(wc, n // 2)

    if 2 * (wa + wb) >= n:
        # offsets alias modulo n; the band covers (nearly) everything anyway
        _tally(n * n * n)
        C = A.to_dense() @ B.to_dense()
        return truncate(0.5 * (C + C.T), wc)

    FA = A.offsets()
    FB = B.offsets()
    if wa:
        ext = np.concatenate([FB[:, n - wa:], FB, FB[:, :wa]], axis=1)
    else:
        ext = FB
    # full[k + wc, i] = C[i, i + k] for k in [-wc, wc]
    full = np.zeros((2 * wc + 1, n))
    ops = 0
    for p in range(-wa, wa + 1):
        d0 = max(-wc, p - wb)
        d1 = min(wc, p + wb)
        if d0 > d1:
            continue
        view = ext[d0 - p + wb: d1 - p + wb + 1, p + wa: p + wa + n]
        full[d0 + wc: d1 + wc + 1] += FA[p + wa] * view
        ops += (d1 - d0 + 1) * n
    _tally(ops)
    out = np.empty((wc + 1, n))
    out[0] = full[wc]
    if wc:
        # C[i + d, i] sits at offset -d in row i + d
        lower = _shift_rows(full[wc - 1:: -1], 1, 1)
        out[1:] = 0.5 * (full[wc + 1:] + lower)
    return BandedSymMatrix(out)


def _shift_rows(A: np.ndarray, start: int, step: int) -> np.ndarray:
    """``R[j, i] = A[j, (i + start + step * j) % n]`` for ``step`` in {-1, 1}."""
    k, n = A.shape
    ext = np.concatenate([A, A], axis=1)
    item = ext.itemsize
    # row j of the result starts at ext[j, (start + step * j) % n], a constant stride
    view = np.lib.stride_tricks.as_strided(
        ext.reshape(-1)[start % n:], shape=(k, n), strides=((2 * n + step) * item, item)
    )
    return view.copy()


def band_axpy(alpha: float, A: BandedSymMatrix, B: BandedSymMatrix) -> BandedSymMatrix:
    """``alpha * A + B``."""
    return alpha * A + B


def _band_weights(M: BandedSymMatrix) -> np.ndarray:
    # each stored super-diagonal stands for two matrix entries, except the
    # main diagonal and (for even n) the antipodal offset n/2
    wts = np.full(M.w + 1, 2.0)
    wts[0] = 1.0
    if M.n % 2 == 0 and M.w == M.n // 2 and M.w > 0:
        wts[-1] = 1.0
    return wts


def trace(M) -> float:
    if isinstance(M, BandedSymMatrix):
        return float(M.bands[0].sum())
    return float(np.trace(M))


def frobenius_norm(M) -> float:
    if isinstance(M, BandedSymMatrix):
        return float(np.sqrt(_band_weights(M) @ np.einsum("ij,ij->i", M.bands, M.bands)))
    return float(np.linalg.norm(M))


def entrywise_l1(M) -> float:
    """Sum of the absolute values of all ``n * n`` entries."""
    if isinstance(M, BandedSymMatrix):
        return float(_band_weights(M) @ np.abs(M.bands).sum(axis=1))
    return float(np.abs(M).sum())


def scalar_shift_diag(M, c: float):
    """``M + c * I``."""
    if isinstance(M, BandedSymMatrix):
        b = M.bands.copy()
        b[0] += c
        return BandedSymMatrix(b)
    M = np.array(M, dtype=float)
    M[np.diag_indices_from(M)] += c
    return M


class SpectralInterval(NamedTuple):
    """Estimated spectral enclosure ``[lower, upper]`` of a symmetric matrix."""

    lower: float
    upper: float
    converged: bool
    vectors: tuple = ()


def _power(apply, v: np.ndarray, tol: float, max_it: int):
    """Dominant eigenvalue of a positive semi-definite operator via power iteration."""
    rho = 0.0
    for it in range(1, max_it + 1):
        y = apply(v)
        rho_new = float(v @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0, v, True
        v = y / nrm
        if abs(rho_new - rho) <= tol * max(1.0, abs(rho_new)):
            return rho_new, v, True
        rho = rho_new
    return rho, v, False


def power_method_extremes(
    M,
    tol: float = 1e-6,
    max_it: int = 200,
    margin: float = 0.05,
    seed: int = 0,
    x0: tuple | None = None,
) -> SpectralInterval:
    """Estimate ``[lambda_min, lambda_max]`` of ``M`` by two shifted power iterations.

    ``lambda_max`` comes from power iteration on ``M + s I`` (``s`` an
    infinity-norm bound, so the operator is positive semi-definite) and
    ``lambda_min`` from ``lambda_max_est * I - M``.  The interval is then
    widened by ``margin`` times its length on both sides and clipped to the
    guaranteed enclosure ``[-s, s]``.

    Pass ``x0`` (the ``vectors`` field of a previous result) to warm-start.
    """
    if margin < 0:
        raise ParameterError("margin must be non-negative")
    M = _as_banded(M)
    n = M.n
    if n == 1:
        v = float(M.bands[0, 0])
        return SpectralInterval(v, v, True, ())
    # Gershgorin: every eigenvalue lies in [-shift, shift]
    absb = np.abs(M.bands)
    rowsum = absb[0].copy()
    for d in range(1, M.w + 1):
        rowsum += absb[d] + np.roll(absb[d], d)
    shift = float(rowsum.max())
    if shift == 0.0:
        return SpectralInterval(0.0, 0.0, True, ())

    if x0:
        v1, v2 = (np.asarray(v, dtype=float) for v in x0)
    else:
        rng = np.random.default_rng(seed)
        v1 = rng.standard_normal(n)
        v2 = rng.standard_normal(n)
    v1 = v1 / np.linalg.norm(v1)
    v2 = v2 / np.linalg.norm(v2)

    mv = M.matvec_operator()
    top, v1, ok1 = _power(lambda x: mv(x) + shift * x, v1, tol, max_it)
    lmax = top - shift
    span, v2, ok2 = _power(lambda x: lmax * x - mv(x), v2, tol, max_it)
    lmin = lmax - span

    pad = margin * (lmax - lmin)
    lower = max(lmin - pad, -shift)
    upper = min(lmax + pad, shift)
    return SpectralInterval(lower, upper, ok1 and ok2, (v1, v2))
