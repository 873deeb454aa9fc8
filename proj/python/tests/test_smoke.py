"""Smoke tests for the hmoe extension module."""

import math

import numpy as np
import pytest

import hmoe


def test_sample_fit_roundtrip():
    truth = hmoe.default_rate_truth()
    truth.validate()
    data = hmoe.sample(truth, hmoe.GatingCombo.SS, 500, seed=42)
    assert data.n() == 500
    assert data.dim() == 1

    cfg = hmoe.FitConfig()
    cfg.k1 = 2
    cfg.k2 = 2
    cfg.restarts = 1
    cfg.max_iters = 40
    cfg.init = hmoe.InitScheme.PerturbedTruth
    cfg.perturb_scale = 0.05
    cfg.seed = 7
    # PerturbedTruth pulls the truth from the dataset sidecar fields, which
    # the sampler fills in.
    fit = hmoe.fit_mle(data, hmoe.GatingCombo.SS, cfg)
    assert math.isfinite(fit.final_loglik)
    assert fit.trace == sorted(fit.trace) or all(
        b >= a - 1e-9 for a, b in zip(fit.trace, fit.trace[1:])
    )
    norm_truth = hmoe.normalize(truth, hmoe.GatingCombo.SS)
    loss = hmoe.loss_for_combo(fit.estimate, norm_truth, hmoe.GatingCombo.SS)
    assert loss.value >= 0.0


def test_density_and_likelihood():
    truth = hmoe.default_rate_truth()
    p = hmoe.conditional_density(truth, hmoe.GatingCombo.LL, np.array([0.3]), 0.5)
    assert p > 0.0
    data = hmoe.sample(truth, hmoe.GatingCombo.LL, 200, seed=1)
    ll = hmoe.log_likelihood(truth, hmoe.GatingCombo.LL, data)
    assert math.isfinite(ll)


def test_json_roundtrip():
    truth = hmoe.default_rate_truth()
    text = hmoe.to_json(truth, hmoe.GatingCombo.SL)
    back, combo = hmoe.measure_from_json(text)
    assert combo == hmoe.GatingCombo.SL
    assert hmoe.to_json(back, combo) == text


def test_hellinger_bounds():
    truth = hmoe.default_rate_truth()
    assert hmoe.hellinger(truth, truth, hmoe.GatingCombo.SS, probes=8) < 1e-7
    other = hmoe.default_rate_truth()
    other.groups[0].experts[0].expert.tau += 2.0
    h = hmoe.hellinger(truth, other, hmoe.GatingCombo.SS, probes=8)
    tv = hmoe.total_variation(truth, other, hmoe.GatingCombo.SS, probes=8)
    assert 0.0 < h < 1.0
    assert h * h <= tv <= math.sqrt(2.0) * h + 1e-12


def test_polysys_residuals_and_search():
    sys = hmoe.PolySystem()
    sys.kind = hmoe.GatingCombo.LL
    sys.m = 2
    sys.r = 3
    sol = hmoe.CandidateSolution.zeros(sys)
    sol.p = np.array([1.0, 1.0])
    sol.q4 = np.array([1.0, -1.0])
    sol.q5 = np.array([-0.5, -0.5])
    res = hmoe.residuals(sys, sol)
    assert np.max(np.abs(res)) < 1e-15
    assert hmoe.is_nontrivial(sol, 1e-3)

    report = hmoe.search_nontrivial(sys, restarts=8, seed=5)
    assert report.attempts == 8
    assert report.best_residual < 1e-10 or report.found is None


def test_routing_identity_reconstruction():
    batch = hmoe.TokenBatch()
    batch.batch = 2
    batch.seq_len = 4
    rng = np.random.default_rng(0)
    batch.data = rng.uniform(-1.0, 1.0, size=(8, 3))
    cfg = hmoe.RouteConfig()
    cfg.e_outer = 2
    cfg.e_inner = 2
    cfg.cap_outer = 8
    cfg.cap_inner = 8
    cfg.topk_outer = 2
    cfg.topk_inner = 2
    cfg.seed = 3
    out = hmoe.hmoe_forward(batch, cfg)
    assert np.max(np.abs(out.output.data - batch.data)) < 1e-12
    assert out.total_loss > 0.0


def test_invalid_input_raises():
    sys = hmoe.PolySystem()
    sys.m = 1  # must be >= 2
    with pytest.raises(hmoe.InvalidInput):
        hmoe.search_nontrivial(sys, restarts=1)
