import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import varbesov as vb

CONFIG_DIR = Path(os.environ.get("VARBESOV_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def test_exponent_fields():
    s = vb.ExponentField.trig(1.5, [0.3])
    assert s(0.0) == pytest.approx(1.8)
    assert s.lower_bound == pytest.approx(1.2)
    assert np.allclose(s(np.array([0.0, 0.5])), [1.8, 1.2])
    assert vb.gap_condition(vb.ExponentField.constant(1.3), s, vb.ExponentField.constant(2.0)) == pytest.approx(0.6)


def test_wavelet_round_trip_and_parseval():
    rng = np.random.default_rng(0)
    f = rng.standard_normal(256)
    c = vb.analyze(f)
    assert c.shape == (256,)
    assert np.allclose(vb.synthesize(c, grid_size=256), f, atol=1e-12)
    assert np.sum(c**2) == pytest.approx(np.mean(f**2), rel=1e-12)
    lam = vb.convert(c, "u", "lambda")
    assert np.allclose(vb.convert(lam, "lambda", "u"), c)


def test_modular_closed_form():
    rng = np.random.default_rng(1)
    lam = rng.standard_normal(32)
    s, q = 0.8, 1.5
    levels = np.concatenate([[0], np.floor(np.log2(np.arange(1, 32))).astype(int)])
    expected = np.sum(2.0 ** (levels * (s * q - 1)) * np.abs(lam) ** q)
    S, Q = vb.ExponentField.constant(s), vb.ExponentField.constant(q)
    assert vb.modular_value(lam, S, Q) == pytest.approx(expected, rel=1e-10)
    assert vb.luxemburg_norm(lam, S, Q) == pytest.approx(expected ** (1 / q), rel=1e-8)
    with pytest.raises(ValueError):
        vb.modular_value(np.ones(5), S, Q)


def test_prior_draws_are_deterministic():
    spec = vb.PriorSpec(vb.ExponentField.trig(1.5, [0.3]), vb.ExponentField.constant(2.0), truncation=5, seed=3)
    model = vb.PriorModel(spec)
    a, b = model.draw(4), model.draw(4)
    assert a.shape == (64,)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, model.draw(5))
    xi = vb.sample_xi(vb.ExponentField.constant(1.0), 20000, seed=1)
    assert np.var(xi) == pytest.approx(8.0, rel=0.1)


def test_forward_maps():
    x = np.arange(128) / 128
    f = np.cos(2 * np.pi * 3 * x)
    heat = vb.ForwardModel.heat(0.01)
    assert np.allclose(vb.propagate(f, heat), math.exp(-(2 * np.pi * 3) ** 2 * 0.01) * f, atol=1e-12)
    frac = vb.ForwardModel.fractional(1.0, 1.0, 0.01)
    assert frac.multiplier(5) == pytest.approx(heat.multiplier(5), abs=1e-10)
    assert vb.mittag_leffler(1.0, -2.0) == pytest.approx(math.exp(-2.0), abs=1e-12)


def make_posterior(J=4, k=6, variance=0.01):
    spec = vb.PriorSpec(vb.ExponentField.constant(1.5), vb.ExponentField.constant(2.0), truncation=J, seed=2)
    model = vb.ForwardModel.heat(0.01, 16)
    points = vb.equispaced(k)
    gamma = variance * np.eye(k)
    truth = vb.PriorModel(spec).draw(100)
    y = vb.simulate_data(spec, model, points, gamma, truth, seed=5)
    return vb.Posterior(spec, model, points, gamma, y)


def test_posterior_quantities():
    post = make_posterior()
    assert post.potential(np.zeros(post.dimension)) == 0.0
    d, se = vb.hellinger(post, post, 500)
    assert d == 0.0
    z = vb.estimate_z(post, 2000)
    assert z["z"] > 0
    rows = vb.truncation_study(post, [1, 2, 3, 4], 2000)
    assert rows[-1][1] == pytest.approx(0.0, abs=1e-12)


def test_map_and_mcmc():
    post = make_posterior()
    sol = vb.solve_map(post, restarts=1)
    assert sol["converged"]
    assert sol["value"] <= vb.map_objective(post, np.zeros(post.dimension))
    assert vb.map_objective(post, sol["u_coeffs"]) == pytest.approx(sol["value"], rel=1e-9)
    chain = vb.run_mcmc(post, steps=3000, burn_in=500, seed=1)
    assert chain["xi"].shape == (2500, post.dimension)
    assert 0.0 < chain["acceptance_rate"] < 1.0


def test_config_validation_and_subcommand(tmp_path):
    text = (CONFIG_DIR / "sample_prior.json").read_text()
    assert not [i for i in vb.validate_config(text) if i["fatal"]]
    bad = (CONFIG_DIR / "invalid_beta.json").read_text()
    issues = vb.validate_config(bad)
    assert any(i["fatal"] and i["path"] == "model.beta" for i in issues)

    manifest = vb.run_subcommand("sample-prior", text, tmp_path)
    assert manifest["subcommand"] == "sample-prior"
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["config_hash"] == manifest["config_hash"]
    values, header = vb.read_coefficients(tmp_path / "sample_0000.bin")
    assert header["count"] == len(values)
    with pytest.raises(vb.ConfigError):
        vb.run_subcommand("sample-prior", "{ not json", tmp_path)
