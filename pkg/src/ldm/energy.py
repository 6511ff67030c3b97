"""Energy functionals ``E_{beta,eta}(P) = tr(HP) + tr phi(P)/beta + |||P|||_1/eta``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .banded import BandedSymMatrix, entrywise_l1
from .errors import ConstraintViolationError

__all__ = ["EnergyBreakdown", "band_energy", "evaluate", "fermi_dirac_entropy", "entropy_scalar"]

_CLAMP = 1e-14
_SLACK = 1e-8


@dataclass(frozen=True)
class EnergyBreakdown:
    band_energy: float
    entropy_term: float
    l1_term: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def entropy_scalar(x):
    """``x ln x + (1 - x) ln(1 - x)`` with ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, (1 - x) * np.log(np.where(x < 1, 1 - x, 1.0)), 0.0)
    return a + b


def fermi_dirac_entropy(P, strict: bool = True) -> float:
    """``tr phi(P)`` evaluated on the spectrum of ``P``.

    Eigenvalues are clamped into ``[1e-14, 1 - 1e-14]`` before taking logs.
    With ``strict``, anything further than ``1e-8`` outside ``[0, 1]`` is an
    error; otherwise it is clamped too (Chebyshev iterates overshoot slightly).
    """
    if isinstance(P, BandedSymMatrix):
        P = P.to_dense()
    lam = np.linalg.eigvalsh(np.asarray(P, dtype=float))
    if strict and lam.size and (lam[0] < -_SLACK or lam[-1] > 1 + _SLACK):
        raise ConstraintViolationError(
            f"spectrum [{lam[0]:.3g}, {lam[-1]:.3g}] leaves [0, 1]"
        )
    lam = np.clip(lam, _CLAMP, 1 - _CLAMP)
    return float(entropy_scalar(lam).sum())


def band_energy(H, P) -> float:
    """``tr(H P)`` for any mix of dense and banded operands."""
    if isinstance(H, BandedSymMatrix) and isinstance(P, BandedSymMatrix):
        w = min(H.w, P.w)
        wts = np.full(w + 1, 2.0)
        wts[0] = 1.0
        if H.n % 2 == 0 and w == H.n // 2 and w > 0:
            wts[-1] = 1.0
        return float(wts @ np.einsum("ij,ij->i", H.bands[: w + 1], P.bands[: w + 1]))
    Hd = H.to_dense() if isinstance(H, BandedSymMatrix) else np.asarray(H)
    Pd = P.to_dense() if isinstance(P, BandedSymMatrix) else np.asarray(P)
    return float(np.einsum("ij,ij->", Hd, Pd))


def evaluate(H, P, beta: float = math.inf, eta: float = math.inf, strict: bool = True) -> EnergyBreakdown:
    """Split ``E_{beta,eta}(P)`` into its three terms; infinite parameters drop their term."""
    e_band = band_energy(H, P)
    e_ent = 0.0 if math.isinf(beta) else fermi_dirac_entropy(P, strict) / beta
    e_l1 = 0.0 if math.isinf(eta) else entrywise_l1(P) / eta
    return EnergyBreakdown(e_band, e_ent, e_l1, e_band + e_ent + e_l1)
