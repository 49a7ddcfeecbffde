import math

import numpy as np
import pytest

import rlf_lab


def coarse():
    s = rlf_lab.ExperimentSettings()
    s.lattice_size = 31
    s.dt = 1e-2
    s.grid_spacing = 0.05
    s.norm_lattice_size = 31
    s.pair_count = 200
    return s


def test_fields():
    rot = rlf_lab.rotation_field()
    assert rot.kind == "rotation"
    np.testing.assert_array_equal(rot.eval(0.0, [1.0, 0.0]), [0.0, 1.0])
    np.testing.assert_array_equal(rot.grad(0.0, [0.3, 0.2]), [[0.0, -1.0], [1.0, 0.0]])
    shifted = rlf_lab.make_perturbation(rot, epsilon=0.1)
    assert shifted.eval(0.0, [0.0, 0.0])[0] == pytest.approx(0.1)
    a = rlf_lab.make_perturbation(rot, mode="seeded-random-trig", epsilon=0.05, seed=7)
    b = rlf_lab.make_perturbation(rot, mode="seeded-random-trig", epsilon=0.05, seed=7)
    assert (a.eval(0.0, [0.4, -0.2]) == b.eval(0.0, [0.4, -0.2])).all()


def test_errors_map_to_lab_error():
    with pytest.raises(rlf_lab.LabError, match="configuration"):
        rlf_lab.make_perturbation(rlf_lab.rotation_field(), mode="nope")
    with pytest.raises(rlf_lab.LabError, match="invalid-input"):
        rlf_lab.rotation_field().eval(0.0, [math.nan, 0.0])


def test_flow_and_compressibility():
    e = rlf_lab.integrate_points(rlf_lab.rotation_field(), [[1.0, 0.0]], tau=math.pi / 2)
    assert e.positions.shape == (e.times.size, 1, 2)
    np.testing.assert_allclose(e.positions[-1, 0], [0.0, 1.0], atol=1e-9)

    ens = rlf_lab.integrate_ensemble(rlf_lab.contraction_field(), coarse())
    assert ens.weights.sum() == pytest.approx(math.pi, rel=0.05)
    est = rlf_lab.estimate_compressibility(ens, 0.1)
    assert est["L_hat"] > 1.0
    assert rlf_lab.check_trajectory_confinement(ens, 1.0, rlf_lab.contraction_field().sup_norm)


def test_grid_and_lemmas():
    h = 0.05
    xs = np.arange(-1.5, 1.5 + h / 2, h)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    g = rlf_lab.GridFunction([-1.5, -1.5], h, 0.6 * X + 0.8 * Y)
    assert g.interpolate([0.1, 0.2]) == pytest.approx(0.22)
    rep = rlf_lab.check_pointwise_bv(g, lambda_=0.5, pair_count=2000, seed=3)
    assert rep["empirical_constant"] <= 0.5 + 1e-12
    assert rep["empirical_constant"] > 0.49
    m = rlf_lab.local_maximal_function(rlf_lab.GridFunction([-1.5, -1.5], h, np.ones_like(X)), 0.4)
    np.testing.assert_allclose(m.values, 1.0, rtol=1e-14)
    c = rlf_lab.check_maximal_lp_bound(rlf_lab.GridFunction([-1.5, -1.5], h, np.ones_like(X)), 0.5, 2.0, 1.0)
    assert c["empirical_constant"] == pytest.approx(1.0 / 1.5, rel=0.03)


def test_main_estimate_and_sweep():
    s = coarse()
    rep = rlf_lab.verify_main_estimate(rlf_lab.rotation_field(), epsilon=1e-4, settings=s)
    assert rep["main_estimate_holds"] == (rep["lhs_sup"] <= rep["rhs_bound"])
    assert rep["delta"] > 0
    exact = rlf_lab.verify_main_estimate(rlf_lab.rotation_field(), epsilon=0.0, settings=s)
    assert exact["exact_equality"]
    sweep = rlf_lab.sweep_epsilon(rlf_lab.rotation_field(), [1e-3, 1e-4, 0.0], settings=s)
    assert len(sweep["rows"]) == 2
    assert sweep["warnings"]
    with pytest.raises(rlf_lab.LabError):
        rlf_lab.sweep_epsilon(rlf_lab.rotation_field(), [], settings=s)
