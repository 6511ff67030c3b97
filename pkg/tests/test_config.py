import json
import math

import numpy as np
import pytest

from ldm.banded import BandedSymMatrix
from ldm.config import (
    ExperimentConfig,
    dumps_config,
    load_config,
    loads_config,
    read_matrix,
    save_config,
    write_matrix,
)
from ldm.errors import ConfigurationError

from conftest import random_banded, random_sym


def test_default_round_trip():
    cfg = ExperimentConfig()
    assert loads_config(dumps_config(cfg)) == cfg


def test_round_trip_with_overrides(tmp_path):
    cfg = ExperimentConfig().replace(**{"solver": "alg5", "beta": 1.0, "w": 15, "cheb.m_fd": 20, "domain.n": 200, "domain.L": 50.0})
    path = tmp_path / "c.json"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg
    assert back.solver_cfg.w == 15 and back.domain.n == 200


def test_infinite_beta_is_written_as_string():
    flat = json.loads(dumps_config(ExperimentConfig()))
    assert flat["beta"] == "inf"
    assert math.isinf(loads_config(json.dumps(flat)).solver_cfg.beta)


def test_lambda_key_maps_to_penalty():
    cfg = loads_config('{"lambda": 3.0, "r": 2.0}')
    assert cfg.solver_cfg.lam == 3.0 and cfg.solver_cfg.r == 2.0


def test_domain_change_recomputes_centers():
    cfg = ExperimentConfig().replace(**{"domain.L": 50.0, "domain.n": 200})
    assert max(cfg.potential.centers) < 50.0


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        "[1, 2]",
        '{"unknown_key": 1}',
        '{"solver": "alg7"}',
        '{"w": "wide"}',
        '{"w": 2.5}',
        '{"cheb.jackson": "yes"}',
        '{"eta": -1.0}',
    ],
)
def test_malformed_config(text):
    with pytest.raises(ConfigurationError):
        loads_config(text)


def test_matrix_file_round_trip_banded(tmp_path, rng):
    M = random_banded(rng, 12, 2)
    write_matrix(tmp_path / "m.csv", M)
    back = read_matrix(tmp_path / "m.csv")
    assert isinstance(back, BandedSymMatrix) and back.w == 2
    assert np.array_equal(back.to_dense(), M.to_dense())
    assert (tmp_path / "m.csv").read_text().startswith("# n=12 w=2")


def test_matrix_file_round_trip_dense(tmp_path, rng):
    D = random_sym(rng, 7)
    write_matrix(tmp_path / "d.csv", D)
    assert np.array_equal(read_matrix(tmp_path / "d.csv"), D)


def test_matrix_file_rejects_bad_input(tmp_path):
    p = tmp_path / "x.csv"
    np.savetxt(p, np.arange(6.0).reshape(2, 3), delimiter=",")
    with pytest.raises(ConfigurationError):
        read_matrix(p)
    np.savetxt(p, np.array([[1.0, 2.0], [3.0, 4.0]]), delimiter=",")
    with pytest.raises(ConfigurationError):
        read_matrix(p)
    p.write_text("a,b\nc,d\n")
    with pytest.raises(ConfigurationError):
        read_matrix(p)
