"""Experiment configuration and plain-text matrix files.

A configuration file is a flat JSON object with dotted keys::

    {"solver": "alg4", "domain.n": 400, "potential.V0": 2.0,
     "eta": 100.0, "beta": "inf", "lambda": 10.0, "cheb.m_et": 50}

Infinite values may be written as ``"inf"`` or JSON ``Infinity``.
Matrices are stored densely, one row per line, after a ``# n=<n> w=<w>``
header.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .banded import BandedSymMatrix, truncate
from .bregman import SOLVERS, SolverConfig
from .errors import ConfigurationError
from .hamiltonian import DomainSpec, PotentialSpec, build_hamiltonian

__all__ = [
    "ExperimentConfig",
    "dumps_config",
    "load_config",
    "loads_config",
    "read_matrix",
    "save_config",
    "write_matrix",
]

# flat key -> SolverConfig field
_SOLVER_KEYS = {
    "eta": "eta",
    "beta": "beta",
    "N": "N",
    "lambda": "lam",
    "r": "r",
    "w": "w",
    "cheb.m_et": "m_et",
    "cheb.m_fd": "m_fd",
    "cheb.w_work": "w_work",
    "cheb.jackson": "jackson",
    "power.margin": "power_margin",
    "tol_outer": "tol_outer",
    "max_outer": "max_outer",
    "inner_fp_iters": "inner_fp_iters",
    "inner_qd_iters": "inner_qd_iters",
    "allow_noncontractive": "allow_noncontractive",
    "track_entropy": "track_entropy",
    "seed": "seed",
}
_DOMAIN_KEYS = {"domain.L": "L", "domain.n": "n"}
_POTENTIAL_KEYS = {
    "potential.kind": "kind",
    "potential.V0": "V0",
    "potential.delta": "delta",
    "potential.N_at": "N_at",
    "potential.centers": "centers",
}
_OTHER_KEYS = {"solver", "hamiltonian"}
_FLOAT_FIELDS = {"eta", "beta", "lam", "r", "power_margin", "tol_outer", "L", "V0", "delta"}
_INT_FIELDS = {"N", "w", "m_et", "m_fd", "w_work", "max_outer", "inner_fp_iters", "inner_qd_iters", "seed", "n", "N_at"}
_BOOL_FIELDS = {"jackson", "allow_noncontractive", "track_entropy"}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a single solve."""

    solver: str = "alg1"
    domain: DomainSpec = field(default_factory=DomainSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    hamiltonian: str | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"unknown solver {self.solver!r}; choose from {sorted(SOLVERS)}")

    def build_H(self) -> BandedSymMatrix:
        """The Hamiltonian from the ``hamiltonian`` file if set, else from the model."""
        if self.hamiltonian:
            return read_matrix(self.hamiltonian)
        return build_hamiltonian(self.domain, self.potential)

    def to_flat(self) -> dict:
        out = {"solver": self.solver}
        if self.hamiltonian:
            out["hamiltonian"] = self.hamiltonian
        for key, attr in _DOMAIN_KEYS.items():
            out[key] = getattr(self.domain, attr)
        for key, attr in _POTENTIAL_KEYS.items():
            v = getattr(self.potential, attr)
            out[key] = list(v) if isinstance(v, tuple) else v
        for key, attr in _SOLVER_KEYS.items():
            out[key] = getattr(self.solver_cfg, attr)
        return out

    @classmethod
    def from_flat(cls, flat: dict) -> "ExperimentConfig":
        unknown = set(flat) - set(_SOLVER_KEYS) - set(_DOMAIN_KEYS) - set(_POTENTIAL_KEYS) - _OTHER_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        dom = {a: _coerce(a, flat[k]) for k, a in _DOMAIN_KEYS.items() if k in flat}
        pot = {a: _coerce(a, flat[k]) for k, a in _POTENTIAL_KEYS.items() if k in flat}
        sol = {a: _coerce(a, flat[k]) for k, a in _SOLVER_KEYS.items() if k in flat}
        try:
            domain = DomainSpec(**dom)
            if pot.get("kind", "kronig_penney") == "kronig_penney" and pot.get("centers") is None:
                potential = PotentialSpec.for_domain(domain, **pot)
            else:
                potential = PotentialSpec(**pot)
            solver_cfg = SolverConfig(**sol)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc
        return cls(flat.get("solver", "alg1"), domain, potential, solver_cfg, flat.get("hamiltonian"))

    def replace(self, **flat_overrides) -> "ExperimentConfig":
        flat = self.to_flat()
        if "centers" not in flat_overrides and ("domain.L" in flat_overrides or "potential.N_at" in flat_overrides):
            # recompute default centres for the new domain
            flat.pop("potential.centers")
        flat.update(flat_overrides)
        return ExperimentConfig.from_flat(flat)


def _coerce(attr: str, v):
    if v is None:
        return None
    try:
        if attr in _FLOAT_FIELDS:
            return float(v)
        if attr in _INT_FIELDS:
            if isinstance(v, float) and not v.is_integer():
                raise ValueError
            return int(v)
        if attr in _BOOL_FIELDS:
            if not isinstance(v, bool):
                raise ValueError
            return v
        if attr == "centers":
            return tuple(float(c) for c in v)
    except (TypeError, ValueError):
        raise ConfigurationError(f"bad value {v!r} for {attr}") from None
    return v


def _encode(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def dumps_config(cfg: ExperimentConfig) -> str:
    return json.dumps({k: _encode(v) for k, v in cfg.to_flat().items()}, indent=2, sort_keys=True)


def loads_config(text: str) -> ExperimentConfig:
    try:
        flat = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    if not isinstance(flat, dict):
        raise ConfigurationError("config must be a JSON object")
    return ExperimentConfig.from_flat(flat)


def load_config(path) -> ExperimentConfig:
    return loads_config(Path(path).read_text())


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg) + "\n")


def write_matrix(path, M) -> None:
    """Write ``M`` densely with full double precision."""
    if isinstance(M, BandedSymMatrix):
        w, D = M.w, M.to_dense()
    else:
        D = np.asarray(M, dtype=float)
        w = D.shape[0] // 2
    np.savetxt(path, D, fmt="%.17g", delimiter=",", header=f"n={D.shape[0]} w={w}")


def read_matrix(path) -> BandedSymMatrix | np.ndarray:
    """Read a matrix written by :func:`write_matrix`.

    Returns a :class:`BandedSymMatrix` when the header declares a band
    narrower than ``n // 2``, the dense array otherwise.
    """
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
    meta = {}
    if header.startswith("#"):
        for tok in header[1:].split():
            k, _, v = tok.partition("=")
            meta[k] = v
    try:
        D = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse matrix file {path}: {exc}") from exc
    if D.shape[0] != D.shape[1]:
        raise ConfigurationError(f"{path}: matrix is {D.shape[0]}x{D.shape[1]}, not square")
    if "n" in meta and int(meta["n"]) != D.shape[0]:
        raise ConfigurationError(f"{path}: header says n={meta['n']}, found {D.shape[0]}")
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, np.abs(D).max())):
        raise ConfigurationError(f"{path}: matrix is not symmetric")
    w = int(meta.get("w", D.shape[0] // 2))
    if w < D.shape[0] // 2:
        return truncate(D, w)
    return D

