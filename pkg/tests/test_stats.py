import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import kstest

import levyheat as lh
from levyheat import stats as st
from levyheat.errors import ConfigMismatchError, EmptySampleError, MissingAtomLogError
from levyheat.streams import stream

from conftest import small_sim


# ---------------------------------------------------------------------------
# KS and ECF
# ---------------------------------------------------------------------------

def test_ks_identical_zero():
    x = np.linspace(0, 1, 50)
    d, p = lh.ks_two_sample(x, x.copy())
    assert d == 0.0 and p == 1.0


def test_ks_disjoint_one():
    d, _ = lh.ks_two_sample(np.zeros(40), np.ones(40))
    assert d == 1.0


def test_ks_null_level():
    rng = np.random.default_rng(2024)
    a, b = rng.normal(size=10_000), rng.normal(size=10_000)
    d, p = lh.ks_two_sample(a, b)
    assert d < 0.03
    assert 0.0 <= p <= 1.0


def test_ks_symmetry_and_monotone_invariance():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=500), rng.normal(0.3, 1.2, size=400)
    d1, p1 = lh.ks_two_sample(a, b)
    d2, p2 = lh.ks_two_sample(b, a)
    assert d1 == d2 and p1 == p2
    f = lambda x: np.exp(0.7 * x) + x  # strictly monotone
    d3, _ = lh.ks_two_sample(f(a), f(b))
    assert d3 == pytest.approx(d1, abs=1e-15)


def test_ks_empty_raises():
    with pytest.raises(EmptySampleError):
        lh.ks_two_sample(np.array([]), np.ones(3))


def test_sample_set_validation():
    with pytest.raises(EmptySampleError):
        lh.SampleSet(np.array([1.0]))
    with pytest.raises(EmptySampleError):
        lh.SampleSet(np.array([1.0, np.nan]))
    ss = lh.SampleSet(np.array([0.0, 1.0]), provenance={"kind": "test"})
    assert lh.ks_two_sample(ss, ss)[0] == 0.0


def test_ecf_examples():
    rng = np.random.default_rng(4)
    a = rng.normal(size=20_000)
    assert lh.ecf_distance(a, a.copy()) == 0.0
    shifted = a + 10.0
    grid = np.linspace(0.05, 3.0, 60)
    d = lh.ecf_distance(a, shifted, grid)
    assert 1.8 <= d <= 2.0
    b = rng.normal(size=100) * 50
    assert lh.ecf_distance(a[:100], b, grid) <= 2.0


# ---------------------------------------------------------------------------
# martingale diagnostics
# ---------------------------------------------------------------------------

def test_martingale_zero_paths(cp_symmetric):
    cfg = small_sim(cp_symmetric, 2.0, 0.0, f=lh.constant_f(0.0), steps=256)
    probe = lh.MartingaleProbe(0.7, lh.SmoothBump(), 0.25, 0.75)
    paths = (lh.simulate_path(cfg, stream(1, i, "t")) for i in range(5))
    rows = lh.martingale_residual(paths, probe)
    for r in rows:
        assert abs(r.estimate) == pytest.approx(0.0, abs=1e-12)
        assert r.z_score == pytest.approx(0.0, abs=1e-9)


def test_martingale_s_equals_t(cp_symmetric):
    cfg = small_sim(cp_symmetric, 2.0, 0.0, steps=256)
    probe = lh.MartingaleProbe(1.0, lh.SmoothBump(), 0.5, 0.5)
    paths = (lh.simulate_path(cfg, stream(2, i, "t")) for i in range(4))
    rows = lh.martingale_residual(paths, probe)
    for r in rows:
        assert r.estimate == 0.0


def test_martingale_small_mc(gamma_model):
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 60.0)
    cfg = small_sim(gamma_model, 0.1, eta, steps=1024, modes=32, collocation=128)
    probes = [lh.MartingaleProbe(xi, lh.SmoothBump(), 0.25, 0.75) for xi in (0.5, 1.0)]
    paths = (lh.simulate_path(cfg, stream(31, i, "atoms")) for i in range(200))
    rows = lh.martingale_residual(paths, probes)
    assert len(rows) == 6
    for r in rows:
        assert r.z_score <= 4.0  # generous at 200 paths; acceptance tightens this


def test_martingale_second_moment_bounded_across_eps(gamma_model):
    # sup_eps E|M_t|^2 proxy: no growth trend over the eps grid
    bounds = []
    probe = lh.MartingaleProbe(1.0, lh.SmoothBump(), 0.25, 0.75)
    for eps in (1e-1, 1e-2, 1e-3):
        eta = lh.eta_for_atom_budget(gamma_model, eps, 1.0, 60.0)
        cfg = small_sim(gamma_model, eps, eta, steps=512, modes=32, collocation=128)
        coeffs = probe.coefficients(32)
        cdd = -(np.arange(1, 33, dtype=float) ** 2) * coeffs
        vals = []
        for i in range(60):
            path = lh.simulate_path(cfg, stream(37, i, f"m2:{eps}"))
            psi = st._compensator_psi(
                gamma_model, eps, path.atom_log.eta,
                lambda x: probe.xi * st.phi_values(np.arange(1, 33), x).T @ coeffs)
            dM, _ = st._probe_values_one_path(path, probe, psi, coeffs, cdd)
            vals.append(abs(dM) ** 2)
        bounds.append(np.mean(vals))
    assert max(bounds) < 4.0
    assert max(bounds) / min(bounds) < 2.0


def test_martingale_config_mismatch(cp_symmetric, gamma_model):
    cfg1 = small_sim(cp_symmetric, 2.0, 0.0, steps=256)
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 50.0)
    cfg2 = small_sim(gamma_model, 0.1, eta, steps=256)
    probe = lh.MartingaleProbe(1.0, lh.SmoothBump(), 0.25, 0.75)
    paths = [lh.simulate_path(cfg1, stream(0, 0, "t")), lh.simulate_path(cfg2, stream(0, 0, "t"))]
    with pytest.raises(ConfigMismatchError):
        lh.martingale_residual(paths, probe)


def test_martingale_rejects_gaussian_paths():
    cfg = lh.SimConfig(noise=lh.GaussianNoiseSpec(), f=lh.constant_f(1.0), T=1.0,
                       modes=8, collocation=32, steps=128)
    probe = lh.MartingaleProbe(1.0, lh.SmoothBump(), 0.25, 0.75)
    with pytest.raises(MissingAtomLogError):
        lh.martingale_residual([lh.simulate_path(cfg, stream(0, 0, "g"))], probe)


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------

def test_characteristics_partition_identity(cp_symmetric):
    cfg = small_sim(cp_symmetric, 2.0, 0.0, steps=256)
    path = lh.simulate_path(cfg, stream(41, 0, "t"))
    phihat = lh.SmoothBump().sine_coefficients(32)
    est_small = lh.characteristics_estimate(path, phihat, h=0.2)
    est_all = lh.characteristics_estimate(path, phihat, h=1e9)
    # omitted big jumps plus kept quadratic sum recovers the full sum exactly
    big_part = np.sum(est_small.jump_sizes ** 2) - est_small.quadratic_sum[-1]
    assert est_all.big_jump_count == 0
    assert est_all.quadratic_sum[-1] == pytest.approx(
        est_small.quadratic_sum[-1] + big_part, rel=1e-14)


def test_characteristics_fast_route_agreement(gamma_model):
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 80.0)
    cfg = small_sim(gamma_model, 0.1, eta, steps=512, modes=32, collocation=128)
    phihat = lh.SmoothBump().sine_coefficients(32)
    quad, bigs = st.characteristics_sample(cfg, phihat, 0.5, 5, 43)
    for i in range(5):
        path = lh.simulate_path(cfg, stream(43, i, "atoms"))
        est = lh.characteristics_estimate(path, phihat, 0.5)
        assert est.quadratic_sum[-1] == pytest.approx(quad[i], abs=1e-10)
        assert est.big_jump_count == bigs[i]


def test_characteristics_drift_sign(gamma_model):
    # positive jumps only: removed-big-jump compensator pushes drift negative
    eta = lh.eta_for_atom_budget(gamma_model, 0.5, 1.0, 80.0)
    cfg = small_sim(gamma_model, 0.5, eta, steps=256, modes=32, collocation=128)
    path = lh.simulate_path(cfg, stream(44, 0, "atoms"))
    est = lh.characteristics_estimate(path, lh.SmoothBump().sine_coefficients(32), h=0.3)
    assert est.drift[-1] <= 0.0
    assert est.drift[0] == 0.0


# ---------------------------------------------------------------------------
# terminal samplers and the dichotomy experiment
# ---------------------------------------------------------------------------

def test_terminal_sampler_matches_path_solver(gamma_model):
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 80.0)
    cfg = small_sim(gamma_model, 0.1, eta, modes=16, collocation=64, steps=128)
    fns = [st.mode_functional(1, 16), st.point_functional(math.pi / 2, 16)]
    fast = st.collect_terminal_samples(cfg, fns, 6, 99, purpose="atoms")
    for i in range(6):
        path = lh.simulate_path(cfg, stream(99, i, "atoms"))
        e1 = np.zeros(16)
        e1[0] = 1.0
        assert fast["mode1"][i] == pytest.approx(lh.pairing(path, 1.0, e1), abs=1e-12)
        assert fast[fns[1].name][i] == pytest.approx(
            lh.evaluate(path, 1.0, math.pi / 2), abs=1e-12)


def test_terminal_sampler_workers_invariant(gamma_model):
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 50.0)
    cfg = small_sim(gamma_model, 0.1, eta, modes=8, collocation=32, steps=64)
    fns = [st.mode_functional(1, 8)]
    one = st.collect_terminal_samples(cfg, fns, 40, 5, purpose="atoms", workers=1)
    two = st.collect_terminal_samples(cfg, fns, 40, 5, purpose="atoms", workers=2)
    assert np.array_equal(one["mode1"], two["mode1"])


def test_gaussian_control_ks():
    # two independent Gaussian-driven samples: the null level of the KS battery
    cfg = lh.SimConfig(noise=lh.GaussianNoiseSpec(), f=lh.constant_f(1.0), T=1.0,
                       modes=8, collocation=32, steps=64)
    fn = st.mode_functional(1, 8)
    a = st.collect_terminal_samples(cfg, [fn], 10_000, 1, purpose="ctrl_a")["mode1"]
    b = st.collect_terminal_samples(cfg, [fn], 10_000, 1, purpose="ctrl_b")["mode1"]
    d, p = lh.ks_two_sample(a, b)
    assert d < 0.03


def test_gamma_limit_law_non_gaussian(gamma_model):
    # the spec's oracle: the limiting compensated-gamma functional stays away
    # from the Gaussian law; measured distance is ~0.05 in KS (not 0.1)
    var1 = (1.0 - math.exp(-2.0)) / 2.0
    for eps in (1e-1, 1e-3):
        eta = lh.eta_for_atom_budget(gamma_model, eps, 1.0, 120.0)
        spec = lh.LevyNoiseSpec(model=gamma_model, eps=eps, eta=eta,
                                rho_budget=1.0, normalization="retained")
        cfg = lh.SimConfig(noise=spec, f=lh.constant_f(1.0), T=1.0, modes=16,
                           collocation=64, steps=64)
        sm = st.collect_terminal_samples(cfg, [st.mode_functional(1, 16)], 4000, 17,
                                         purpose=f"lim:{eps}")["mode1"]
        d = kstest(sm, "norm", args=(0.0, math.sqrt(var1))).statistic
        assert d > 0.03


def test_dichotomy_experiment_small(gamma_model):
    eta = lh.eta_for_atom_budget(gamma_model, 0.1, 1.0, 60.0)
    template = lh.LevyNoiseSpec(model=gamma_model, eps=0.1, eta=eta,
                                rho_budget=1.0, normalization="retained")
    cfg = lh.SimConfig(noise=template, f=lh.constant_f(1.0), T=1.0, modes=16,
                       collocation=64, steps=64)
    fns = [st.mode_functional(1, 16)]
    rep = lh.dichotomy_experiment([gamma_model], [0.1, 0.05], fns, cfg, 500, 3)
    assert len(rep.rows) == 2
    row = rep.cell("gamma", 0.1, "mode1")
    assert 0.0 <= row.ks <= 1.0 and row.ecf >= 0.0
    assert row.ar_stat == pytest.approx(lh.ar_statistic(gamma_model, 0.1, 1.0))
    import io
    buf = io.StringIO()
    rep.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "model,epsilon,kappa_ref,ar_stat,functional,ks,ks_p,ecf,paths,se"
    assert len(lines) == 3
