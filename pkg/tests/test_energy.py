import math

import numpy as np
import pytest

from ldm.banded import BandedSymMatrix, truncate
from ldm.dense_reference import projector_density_matrix
from ldm.energy import band_energy, entropy_scalar, evaluate, fermi_dirac_entropy
from ldm.errors import ConstraintViolationError

from conftest import random_banded, random_sym


def test_entropy_half_identity():
    assert np.isclose(fermi_dirac_entropy(0.5 * np.eye(4)), -4 * math.log(2), rtol=1e-14)


def test_entropy_projector_is_zero(rng):
    H = random_sym(rng, 12)
    assert abs(fermi_dirac_entropy(projector_density_matrix(H, 5))) < 1e-11


def test_entropy_scalar_oracle():
    want = 2 * (0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    assert np.isclose(fermi_dirac_entropy(np.diag([0.25, 0.75])), want, rtol=1e-14)
    assert entropy_scalar(0.0) == 0.0 and entropy_scalar(1.0) == 0.0


def test_entropy_range(rng):
    for _ in range(10):
        Qm, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        P = (Qm * rng.uniform(0, 1, 8)) @ Qm.T
        e = fermi_dirac_entropy(P)
        assert -8 * math.log(2) - 1e-12 <= e <= 0


def test_entropy_constraint_violation():
    with pytest.raises(ConstraintViolationError):
        fermi_dirac_entropy(np.diag([1.1, 0.5]))
    assert np.isfinite(fermi_dirac_entropy(np.diag([1.1, 0.5]), strict=False))


def test_evaluate_examples(rng):
    H = random_sym(rng, 5)
    assert evaluate(H, np.zeros((5, 5))).total == 0.0
    P = projector_density_matrix(np.diag([1.0, 2.0, 3.0]), 1)
    assert np.isclose(evaluate(np.diag([1.0, 2.0, 3.0]), P).total, 1.0)


def test_breakdown_sums(rng):
    H = random_sym(rng, 6)
    P = 0.4 * np.eye(6) + 0.05 * random_sym(rng, 6)
    e = evaluate(H, P, beta=2.0, eta=10.0)
    assert e.total == e.band_energy + e.entropy_term + e.l1_term
    assert np.isclose(e.l1_term, np.abs(P).sum() / 10.0)
    assert np.isclose(e.band_energy, np.trace(H @ P))
    assert set(e.to_dict()) == {"band_energy", "entropy_term", "l1_term", "total"}


def test_band_energy_banded_fast_path(rng):
    for n, w in [(10, 5), (11, 2), (12, 6)]:
        H = random_banded(rng, n, 1)
        P = random_banded(rng, n, w)
        assert np.isclose(band_energy(H, P), np.trace(H.to_dense() @ P.to_dense()), rtol=1e-12)
        assert np.isclose(band_energy(H, P.to_dense()), band_energy(H, P), rtol=1e-12)


def test_strict_convexity_of_free_energy(rng):
    H = random_sym(rng, 6)
    for _ in range(20):
        Ps = []
        for _ in range(2):
            Qm, _ = np.linalg.qr(rng.standard_normal((6, 6)))
            Ps.append((Qm * rng.uniform(0.05, 0.95, 6)) @ Qm.T)
        mid = evaluate(H, 0.5 * (Ps[0] + Ps[1]), beta=1.0).total
        avg = 0.5 * (evaluate(H, Ps[0], beta=1.0).total + evaluate(H, Ps[1], beta=1.0).total)
        assert mid < avg


def test_entropy_of_banded_input(rng):
    P = truncate(0.5 * np.eye(8), 2)
    assert np.isclose(fermi_dirac_entropy(P), -8 * math.log(2))
    assert isinstance(P, BandedSymMatrix)
