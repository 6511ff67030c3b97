"""Split Bregman solvers for localized density matrices.

Four solvers share one outer loop::

    P^k = argmin_P  ... (P sub-problem)
    Q^k = shrink step on P^k + B^{k-1}
    R^k = projection of P^k + D^{k-1} onto {0 <= R <= I}
    B^k = B^{k-1} + P^k - Q^k
    D^k = D^{k-1} + P^k - R^k

``alg1``/``alg2`` work on dense arrays with exact spectral maps (zero and
finite temperature); ``alg4``/``alg5`` keep every iterate in the cyclic band
``B_w`` and replace the spectral maps by Chebyshev polynomials.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .banded import (
    BandedSymMatrix,
    entrywise_l1,
    frobenius_norm,
    power_method_extremes,
    scalar_shift_diag,
    trace,
    truncate,
)
from .chebyshev import eigen_threshold_cheby, fermi_dirac_cheby
from .dense_reference import eigenvalue_threshold, fermi_dirac
from .energy import EnergyBreakdown, band_energy, evaluate, fermi_dirac_entropy
from .errors import ConfigurationError, ParameterError

__all__ = [
    "IterState",
    "SolveReport",
    "SolverConfig",
    "SOLVERS",
    "p_subproblem_finite_T",
    "p_update_zero_T",
    "q_update_finite_T",
    "qd_inner_bregman",
    "shrink",
    "solve",
    "solve_finite_T_banded",
    "solve_finite_T_dense",
    "solve_zero_T_banded",
    "solve_zero_T_dense",
]

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Run parameters shared by all solvers.

    ``lam`` and ``r`` default to 10 at zero temperature and 1.5 at finite
    temperature (so that ``beta * (lam + r) = 3 < 4`` for ``beta = 1``);
    ``tol_outer`` defaults to 1e-6 for dense and 1e-5 for banded solvers.
    """

    eta: float = 100.0
    beta: float = math.inf
    N: int = 10
    lam: float | None = None
    r: float | None = None
    w: int = 20
    m_et: int = 50
    m_fd: int = 20
    w_work: int | None = None
    jackson: bool = False
    power_margin: float = 0.05
    tol_outer: float | None = None
    max_outer: int = 5000
    inner_fp_iters: int = 5
    inner_qd_iters: int = 20
    allow_noncontractive: bool = False
    track_entropy: bool = False
    seed: int = 42

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive (use inf for no l1 term)")
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive (use inf for zero temperature)")
        if self.N < 0:
            raise ConfigurationError("N must be non-negative")
        for name in ("lam", "r"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.w < 0 or self.m_et < 1 or self.m_fd < 1:
            raise ConfigurationError("w must be >= 0 and Chebyshev degrees >= 1")
        if self.max_outer < 1 or self.inner_fp_iters < 1 or self.inner_qd_iters < 1:
            raise ConfigurationError("iteration counts must be positive")

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    @property
    def penalties(self) -> tuple[float, float]:
        default = 10.0 if self.zero_temperature else 1.5
        lam = default if self.lam is None else self.lam
        r = default if self.r is None else self.r
        return lam, r

    def tolerance(self, banded: bool) -> float:
        if self.tol_outer is not None:
            return self.tol_outer
        return 1e-5 if banded else 1e-6

    @property
    def contraction(self) -> float:
        lam, r = self.penalties
        return self.beta * (lam + r) / 4.0

    def replace(self, **kw) -> "SolverConfig":
        return dataclasses.replace(self, **kw)


@dataclass
class IterState:
    P: object
    Q: object
    R: object
    B: object
    D: object
    k: int = 0


@dataclass
class SolveReport:
    solver: str
    config: SolverConfig
    state: IterState
    history: dict = field(default_factory=dict)
    termination: str = "max_outer"
    energy: EnergyBreakdown | None = None

    @property
    def P(self):
        return self.state.P

    @property
    def iterations(self) -> int:
        return self.state.k

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    def P_dense(self) -> np.ndarray:
        P = self.state.P
        return P.to_dense() if isinstance(P, BandedSymMatrix) else np.asarray(P)


# -- building blocks -----------------------------------------------------------


def shrink(x, t: float):
    """Entrywise soft thresholding ``sign(x) * max(|x| - t, 0)``."""
    if t < 0:
        raise ParameterError("threshold must be non-negative")
    if isinstance(x, BandedSymMatrix):
        return BandedSymMatrix(shrink(x.bands, t))
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _dim(M) -> int:
    return M.n if isinstance(M, BandedSymMatrix) else np.shape(M)[0]


def p_update_zero_T(Q, B, R, D, H, lam: float, r: float, N: float):
    """Minimize ``tr(HP) + lam/2 |P - Q + B|^2 + r/2 |P - R + D|^2`` over ``tr P = N``."""
    s = lam + r
    gamma = (lam / s) * (Q - B) + (r / s) * (R - D) - H * (1.0 / s)
    n = _dim(gamma)
    return scalar_shift_diag(gamma, -(trace(gamma) - N) / n)


def qd_inner_bregman(M_d, eta: float, lam: float, r: float, N: float, iters: int = 20) -> np.ndarray:
    """Approximately solve ``min |q|_1/eta + lam/2 |q - M_d|^2`` subject to ``sum(q) = N``.

    Runs ``iters`` Bregman steps splitting the trace constraint off with
    penalty ``r``; the returned vector is the last hyperplane projection, so
    its entries sum to ``N``.
    """
    if iters < 1:
        raise ParameterError("iters must be at least 1")
    M_d = np.asarray(M_d, dtype=float)
    n = M_d.size
    s = lam + r
    thresh = 0.0 if math.isinf(eta) else 1.0 / (s * eta)
    v = M_d - (M_d.sum() - N) / n
    b = np.zeros(n)
    for _ in range(iters):
        q = shrink((lam / s) * M_d + (r / s) * (v - b), thresh)
        qb = q + b
        v = qb - (qb.sum() - N) / n
        b = qb - v
    return v


def q_update_finite_T(P, B, eta: float, lam: float, r: float, N: float, iters: int = 20):
    """Shrink the off-diagonal of ``P + B`` and solve the trace-constrained diagonal."""
    M = P + B
    t = 0.0 if math.isinf(eta) else 1.0 / (lam * eta)
    if isinstance(M, BandedSymMatrix):
        bands = shrink(M.bands, t)
        bands[0] = qd_inner_bregman(M.bands[0], eta, lam, r, N, iters)
        return BandedSymMatrix(bands)
    Q = shrink(M, t)
    Q[np.diag_indices_from(Q)] = qd_inner_bregman(np.diag(M), eta, lam, r, N, iters)
    return Q


def _dense_fermi_dirac(Y, beta: float) -> np.ndarray:
    lam, V = np.linalg.eigh(Y)
    return (V * fermi_dirac(lam, beta)) @ V.T


def p_subproblem_finite_T(
    Q,
    B,
    R,
    D,
    H,
    beta: float,
    lam: float,
    r: float,
    inner_iters: int = 5,
    Z0=None,
    fd_map: Callable | None = None,
    allow_noncontractive: bool = False,
    history: list | None = None,
):
    """Fixed-point iteration ``Z <- fermi_dirac(H + lam (Z - Q + B) + r (Z - R + D))``.

    The map contracts with factor ``beta (lam + r) / 4``; a factor ``>= 1``
    raises :class:`ConfigurationError` unless ``allow_noncontractive``.
    ``fd_map(Y)`` defaults to the exact spectral Fermi-Dirac function.
    Iterates are appended to ``history`` when given.
    """
    q = beta * (lam + r) / 4.0
    if q >= 1.0 and not allow_noncontractive:
        raise ConfigurationError(
            f"beta*(lam+r)/4 = {q:.3g} >= 1: inner fixed point may not converge"
        )
    if fd_map is None:
        fd_map = lambda Y: _dense_fermi_dirac(Y, beta)  # noqa: E731
    const = H - lam * (Q - B) - r * (R - D)
    if Z0 is None:
        n = _dim(Q)
        Z = 0.5 * (BandedSymMatrix.identity(n) if isinstance(Q, BandedSymMatrix) else np.eye(n))
    else:
        Z = Z0
    if history is not None:
        history.append(Z)
    for _ in range(inner_iters):
        Y = const + (lam + r) * Z
        Z = fd_map(Y)
        if history is not None:
            history.append(Z)
    return Z


# -- outer loop ----------------------------------------------------------------


def _check_dense_H(H) -> np.ndarray:
    H = H.to_dense() if isinstance(H, BandedSymMatrix) else np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ParameterError(f"H must be square, got shape {H.shape}")
    return H


def _check_banded_H(H, w: int) -> BandedSymMatrix:
    if not isinstance(H, BandedSymMatrix):
        H = np.asarray(H, dtype=float)
        H = truncate(H, w)
    if H.w > w:
        if np.any(H.bands[w + 1:]):
            raise ParameterError(f"H has band width {H.w} > w={w}")
        H = truncate(H, w)
    if w > H.n // 2:
        raise ParameterError(f"w={w} exceeds floor(n/2)={H.n // 2}")
    return H.widen(w)


def _outer_loop(name, H, cfg: SolverConfig, banded: bool, p_step, q_step, r_step, callback=None) -> SolveReport:
    n = _dim(H)
    if not 0 <= cfg.N <= n:
        raise ParameterError(f"N={cfg.N} outside [0, {n}]")
    tol = cfg.tolerance(banded)
    if banded:
        P = BandedSymMatrix.identity(n, cfg.w, cfg.N / n)
        zero = BandedSymMatrix.zeros(n, cfg.w)
    else:
        P = np.eye(n) * (cfg.N / n)
        zero = np.zeros((n, n))
    state = IterState(P=P, Q=P, R=P, B=zero, D=zero, k=0)
    hist = {k: [] for k in ("res_pq", "res_pr", "dp", "band_energy", "l1_term", "entropy_term", "total", "time")}
    report = SolveReport(name, cfg, state, hist)
    finite_eta = not math.isinf(cfg.eta)
    finite_beta = not cfg.zero_temperature

    for k in range(1, cfg.max_outer + 1):
        t0 = time.perf_counter()
        P_prev = state.P
        P = p_step(state)
        Q = q_step(P, state)
        R = r_step(P + state.D)
        state.B = state.B + (P - Q)
        state.D = state.D + (P - R)
        state.P, state.Q, state.R, state.k = P, Q, R, k
        elapsed = time.perf_counter() - t0
        if callback is not None:
            callback(state)

        nP = frobenius_norm(P)
        res_pq = frobenius_norm(P - Q)
        res_pr = frobenius_norm(P - R)
        dp = frobenius_norm(P - P_prev)
        e_band = band_energy(H, P)
        e_l1 = entrywise_l1(P) / cfg.eta if finite_eta else 0.0
        e_ent = math.nan
        if finite_beta and cfg.track_entropy:
            e_ent = fermi_dirac_entropy(P, strict=False) / cfg.beta
        elif not finite_beta:
            e_ent = 0.0
        hist["res_pq"].append(res_pq)
        hist["res_pr"].append(res_pr)
        hist["dp"].append(dp)
        hist["band_energy"].append(e_band)
        hist["l1_term"].append(e_l1)
        hist["entropy_term"].append(e_ent)
        hist["total"].append(e_band + e_l1 + (0.0 if math.isnan(e_ent) else e_ent))
        hist["time"].append(elapsed)

        if not np.isfinite(nP):
            report.termination = "diverged"
            break
        # the iterate change guards against stopping on a feasible but
        # unoptimized first step, where P = Q = R already holds
        if max(res_pq, res_pr, dp) / max(1.0, nP) < tol:
            report.termination = "converged"
            break
    else:
        report.termination = "max_outer"

    report.energy = evaluate(H, state.P, cfg.beta, cfg.eta, strict=False)
    log.info("%s: %s after %d iterations", name, report.termination, state.k)
    return report


def solve_zero_T_dense(H, cfg: SolverConfig, callback=None) -> SolveReport:
    """Zero temperature split Bregman with exact eigenvalue thresholding."""
    if not cfg.zero_temperature:
        raise ConfigurationError("alg1 requires beta = inf")
    H = _check_dense_H(H)
    lam, r = cfg.penalties
    t = 0.0 if math.isinf(cfg.eta) else 1.0 / (lam * cfg.eta)
    return _outer_loop(
        "alg1",
        H,
        cfg,
        False,
        lambda s: p_update_zero_T(s.Q, s.B, s.R, s.D, H, lam, r, cfg.N),
        lambda P, s: shrink(P + s.B, t),
        eigenvalue_threshold,
        callback,
    )


def solve_finite_T_dense(H, cfg: SolverConfig, callback=None) -> SolveReport:
    """Finite temperature split Bregman with exact spectral maps."""
    if cfg.zero_temperature:
        raise ConfigurationError("alg2 requires a finite beta")
    H = _check_dense_H(H)
    lam, r = cfg.penalties

    def p_step(s):
        return p_subproblem_finite_T(
            s.Q, s.B, s.R, s.D, H, cfg.beta, lam, r, cfg.inner_fp_iters,
            Z0=s.P, allow_noncontractive=cfg.allow_noncontractive,
        )

    return _outer_loop(
        "alg2",
        H,
        cfg,
        False,
        p_step,
        lambda P, s: q_update_finite_T(P, s.B, cfg.eta, lam, r, cfg.N, cfg.inner_qd_iters),
        eigenvalue_threshold,
        callback,
    )


class _ChebyshevMaps:
    """Chebyshev spectral maps that warm-start the power method between calls."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self._vectors: dict = {}

    def _interval(self, key, M):
        iv = power_method_extremes(
            M, margin=self.cfg.power_margin, seed=self.cfg.seed, x0=self._vectors.get(key)
        )
        if iv.vectors:
            self._vectors[key] = iv.vectors
        return iv

    def threshold(self, M):
        cfg = self.cfg
        return eigen_threshold_cheby(
            M, cfg.m_et, w_out=cfg.w, w_work=cfg.w_work, jackson=cfg.jackson,
            interval=self._interval("et", M),
        )

    def fermi_dirac(self, Y):
        cfg = self.cfg
        return fermi_dirac_cheby(
            Y, cfg.beta, cfg.m_fd, w_out=cfg.w, w_work=cfg.w_work, jackson=cfg.jackson,
            interval=self._interval("fd", Y),
        )


def solve_zero_T_banded(H, cfg: SolverConfig, callback=None) -> SolveReport:
    """Linear-scaling zero temperature solver; all iterates stay in ``B_w``."""
    if not cfg.zero_temperature:
        raise ConfigurationError("alg4 requires beta = inf")
    H = _check_banded_H(H, cfg.w)
    lam, r = cfg.penalties
    t = 0.0 if math.isinf(cfg.eta) else 1.0 / (lam * cfg.eta)
    maps = _ChebyshevMaps(cfg)
    return _outer_loop(
        "alg4",
        H,
        cfg,
        True,
        lambda s: p_update_zero_T(s.Q, s.B, s.R, s.D, H, lam, r, cfg.N),
        lambda P, s: shrink(P + s.B, t),
        maps.threshold,
        callback,
    )


def solve_finite_T_banded(H, cfg: SolverConfig, callback=None) -> SolveReport:
    """Linear-scaling finite temperature solver; all iterates stay in ``B_w``."""
    if cfg.zero_temperature:
        raise ConfigurationError("alg5 requires a finite beta")
    H = _check_banded_H(H, cfg.w)
    lam, r = cfg.penalties
    maps = _ChebyshevMaps(cfg)

    def p_step(s):
        return p_subproblem_finite_T(
            s.Q, s.B, s.R, s.D, H, cfg.beta, lam, r, cfg.inner_fp_iters,
            Z0=s.P, fd_map=maps.fermi_dirac, allow_noncontractive=cfg.allow_noncontractive,
        )

    return _outer_loop(
        "alg5",
        H,
        cfg,
        True,
        p_step,
        lambda P, s: q_update_finite_T(P, s.B, cfg.eta, lam, r, cfg.N, cfg.inner_qd_iters),
        maps.threshold,
        callback,
    )


SOLVERS = {
    "alg1": solve_zero_T_dense,
    "alg2": solve_finite_T_dense,
    "alg4": solve_zero_T_banded,
    "alg5": solve_finite_T_banded,
}


def solve(name: str, H, cfg: SolverConfig, callback=None) -> SolveReport:
    """Dispatch to ``alg1``, ``alg2``, ``alg4`` or ``alg5``.

    ``callback(state)`` runs after every outer iteration with the live
    :class:`IterState`; it must not modify it.
    """
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return fn(H, cfg, callback)
