# SPDX-License-Identifier: Apache-2.0
import math
import os
import pathlib

import numpy as np
import pytest

import finsler_spectra as fs

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_euclidean_norm():
    n = fs.MinkowskiNorm.euclidean(2)
    assert n(np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert n.dual(np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert np.allclose(n.fundamental_tensor(np.array([0.3, -1.0])), np.eye(2))


def test_randers_duality_round_trip():
    n = fs.MinkowskiNorm.randers(np.eye(2), np.array([0.3, -0.2]))
    x = np.array([0.7, 1.1])
    assert n.dual(n.legendre(x)) == pytest.approx(n(x), rel=1e-10)
    assert np.allclose(n.legendre_inv(n.legendre(x)), x, atol=1e-9)


def test_circle_spectrum():
    mesh = fs.make_circle(256)
    metric = fs.MetricSpec.euclidean(1)
    problem = fs.FemProblem(mesh, metric, fs.canonical_measure(metric, "bh"))
    lam = [e["lambda"] for e in fs.linear_spectrum(problem, 5)]
    assert lam == pytest.approx([0, 1, 1, 4, 4], rel=1e-2, abs=1e-8)


def test_nonlinear_matches_linear_on_torus():
    mesh = fs.make_torus(12, 12)
    metric = fs.MetricSpec.euclidean(2)
    problem = fs.FemProblem(mesh, metric, fs.canonical_measure(metric))
    lin = [e["lambda"] for e in fs.linear_spectrum(problem, 3)]
    non = [e["lambda"] for e in fs.nonlinear_spectrum(problem, 3)]
    assert non == pytest.approx(lin, rel=1e-6, abs=1e-9)


def test_ball_eigenvalue_disk():
    assert fs.spaceform_ball_eigen(2, 0.0, 1.0) == pytest.approx(2.404825557695773**2, rel=1e-8)


def test_packing_chain_circle():
    mesh = fs.make_circle(128)
    metric = fs.MetricSpec.euclidean(1)
    r = 0.4
    ca = fs.packing_number(mesh, metric, r)
    co = fs.covering_number(mesh, metric, r)
    assert ca <= co <= fs.packing_number(mesh, metric, r / 2)


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        fs.make_circle(1)
    with pytest.raises(ValueError):
        fs.parse_config('{"schema": "nope"}')


def test_run_bundled_config(tmp_path):
    status, artifacts, messages = fs.run_config(str(ROOT / "configs" / "circle_canonical.json"), str(tmp_path))
    assert status == 0, messages
    names = sorted(os.path.basename(a) for a in artifacts)
    assert "circle_spectrum.csv" in names and "circle_bounds.csv" in names
    rows = (tmp_path / "circle_spectrum.csv").read_text().splitlines()
    assert rows[0] == "k,lambda,residual,multiplicity_cluster,method"
    assert float(rows[2].split(",")[1]) == pytest.approx(1.0, rel=1e-2)
    assert math.isfinite(float(rows[-1].split(",")[1]))
