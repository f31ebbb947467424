import math

import numpy as np
import pytest

from hal.errors import GridError, NoSuccessError, ValidationError
from hal.fock_core import coherent_state, mix, number_state, to_density
from hal.metrology import (
    CampaignConfig,
    NoiseModel,
    _replica_rng,
    apply_noise,
    default_grid,
    estimate_alpha,
    hermite_functions,
    noise_series,
    quadrature_pdf,
    run_campaign,
    sample_homodyne,
    time_budget,
)
from hal.protocol import ProtocolConfig, run_exact

SQRT2 = math.sqrt(2.0)


def analytic_mean_x(state):
    amp = state.amplitudes / state.norm()
    n = np.arange(len(amp) - 1)
    return SQRT2 * float(np.real(np.sum(np.conj(amp[:-1]) * amp[1:] * np.sqrt(n + 1))))


def test_hermite_orthonormality():
    x = default_grid()
    u = hermite_functions(12, x)
    gram = np.trapezoid(u[:, None, :] * u[None, :, :], x, axis=-1)
    assert np.max(np.abs(gram - np.eye(13))) < 1e-8


def test_vacuum_pdf_closed_form():
    pdf = quadrature_pdf(number_state(0, 8))
    want = np.exp(-pdf.x ** 2) / math.sqrt(math.pi)
    assert np.max(np.abs(pdf.density - want)) < 1e-12
    assert abs(pdf.mean()) < 1e-12
    assert abs(pdf.variance() - 0.5) < 1e-9


def test_single_photon_pdf_closed_form():
    pdf = quadrature_pdf(number_state(1, 8))
    want = 2.0 * pdf.x ** 2 * np.exp(-pdf.x ** 2) / math.sqrt(math.pi)
    assert np.max(np.abs(pdf.density - want)) < 1e-12
    assert abs(pdf.variance() - 1.5) < 1e-9


def test_coherent_pdf_mean():
    pdf = quadrature_pdf(coherent_state(0.1, 12))
    assert abs(pdf.mean() - SQRT2 * 0.1) < 1e-6
    assert abs(pdf.variance() - 0.5) < 1e-6


def test_phase_quarter_turn_kills_real_displacement():
    pdf = quadrature_pdf(coherent_state(0.1, 12), phase=math.pi / 2)
    assert abs(pdf.mean()) < 1e-9


def test_mixed_pdf_is_weighted_sum():
    rho = mix([0.7, 0.3], [number_state(0, 6), number_state(1, 6)])
    pdf = quadrature_pdf(rho)
    p0 = quadrature_pdf(number_state(0, 6))
    p1 = quadrature_pdf(number_state(1, 6))
    assert np.max(np.abs(pdf.density - (0.7 * p0.density + 0.3 * p1.density))) < 1e-12


def test_mixed_pdf_matches_pure_for_pure_density():
    psi = coherent_state(0.2, 10)
    a = quadrature_pdf(psi)
    b = quadrature_pdf(to_density(psi))
    assert np.max(np.abs(a.density - b.density)) < 1e-12


def test_grid_too_narrow_raises():
    with pytest.raises(GridError):
        quadrature_pdf(number_state(0, 4), grid=np.linspace(-1.0, 1.0, 2001))


def test_grid_too_coarse_raises():
    with pytest.raises(GridError):
        quadrature_pdf(number_state(3, 8), grid=np.linspace(-8.0, 8.0, 9))


def test_grid_must_increase():
    with pytest.raises(GridError):
        quadrature_pdf(number_state(0, 4), grid=np.array([0.0, 0.0, 1.0]))


def test_sampling_is_deterministic_per_seed():
    state = coherent_state(0.1, 10)
    a = sample_homodyne(state, 0.0, 500, np.random.Generator(np.random.Philox(5)))
    b = sample_homodyne(state, 0.0, 500, np.random.Generator(np.random.Philox(5)))
    assert np.array_equal(a, b)


def test_vacuum_sample_mean_clt():
    n = 100_000
    xs = sample_homodyne(number_state(0, 6), 0.0, n, np.random.Generator(np.random.Philox(11)))
    assert abs(xs.mean()) < 5.0 * math.sqrt(0.5 / n)


def test_coherent_sample_variance():
    n = 1_000_000
    xs = sample_homodyne(coherent_state(0.3, 12), 0.0, n,
                         np.random.Generator(np.random.Philox(12)))
    assert abs(xs.var() - 0.5) < 0.005
    assert abs(xs.mean() - SQRT2 * 0.3) < 5.0 * math.sqrt(0.5 / n)


def test_noise_model_validation():
    with pytest.raises(ValidationError):
        NoiseModel(kind="pink")
    with pytest.raises(ValidationError):
        NoiseModel(sigma_tech=-0.1)
    with pytest.raises(ValidationError):
        NoiseModel(kind="ar1", sigma_tech=0.1, lam=1.0)
    assert NoiseModel(kind="ar1", lam=0.5).correlation_time == -1.0 / math.log(0.5)
    assert NoiseModel().correlation_time == 0.0


def test_zero_sigma_consumes_no_rng():
    rng = np.random.Generator(np.random.Philox(3))
    before = rng.bit_generator.state
    out = noise_series(NoiseModel(kind="white", sigma_tech=0.0), 50, rng)
    assert np.all(out == 0.0)
    np.testing.assert_equal(rng.bit_generator.state, before)
    # systematic noise is deterministic and also leaves the stream untouched
    out = noise_series(NoiseModel(kind="systematic", offset=0.2), 50, rng)
    assert np.all(out == 0.2)
    np.testing.assert_equal(rng.bit_generator.state, before)


def test_systematic_noise_is_exact_shift():
    samples = np.array([0.0, 1.0, -2.0])
    rng = np.random.Generator(np.random.Philox(0))
    out = apply_noise(samples, NoiseModel(kind="systematic", offset=0.1), rng)
    assert np.array_equal(out, samples + 0.1)


def test_white_noise_statistics():
    rng = np.random.Generator(np.random.Philox(21))
    w = noise_series(NoiseModel(kind="white", sigma_tech=0.3), 200_000, rng)
    assert abs(w.std() - 0.3) < 0.003
    lag1 = np.corrcoef(w[1:], w[:-1])[0, 1]
    assert abs(lag1) < 0.01


def test_ar1_autocorrelation_and_stationarity():
    lam, sigma, n = 0.99, 0.2, 100_000
    rng = np.random.Generator(np.random.Philox(22))
    w = noise_series(NoiseModel(kind="ar1", sigma_tech=sigma, lam=lam), n, rng)
    lag1 = np.corrcoef(w[1:], w[:-1])[0, 1]
    assert abs(lag1 - lam) < 0.01
    # stationary marginal has variance sigma^2; tolerance widened because
    # correlated samples carry far fewer effective degrees of freedom
    assert abs(w.var() - sigma * sigma) < 0.15 * sigma * sigma


def test_ar1_first_sample_is_stationary():
    lam, sigma = 0.9, 1.0
    firsts = []
    for k in range(4000):
        rng = np.random.Generator(np.random.Philox(k))
        firsts.append(noise_series(NoiseModel(kind="ar1", sigma_tech=sigma, lam=lam), 2, rng)[0])
    v = np.var(firsts)
    assert abs(v - sigma * sigma) < 5.0 * sigma * sigma * math.sqrt(2.0 / 4000)


def test_estimate_alpha():
    assert estimate_alpha([SQRT2], "direct") == pytest.approx(1.0, abs=1e-15)
    assert estimate_alpha([SQRT2], "amplified", t=0.1) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(NoSuccessError):
        estimate_alpha([], "direct")
    with pytest.raises(ValidationError):
        estimate_alpha([1.0], "amplified")
    with pytest.raises(ValidationError):
        estimate_alpha([1.0], "sideways")


def test_campaign_config_validation():
    noise = NoiseModel()
    proto = ProtocolConfig(alpha=0.01, t=0.1)
    with pytest.raises(ValidationError):
        CampaignConfig(scheme="amplified", true_alpha=0.01, total_time=1.0,
                       noise=noise, seed=1, replicas=2)
    with pytest.raises(ValidationError):
        CampaignConfig(scheme="direct", true_alpha=0.01, total_time=1.0,
                       noise=noise, seed=1, replicas=2, protocol=proto)
    with pytest.raises(ValidationError):
        CampaignConfig(scheme="direct", true_alpha=0.01, total_time=0.01,
                       noise=noise, seed=1, replicas=2)  # under one run period
    cfg = CampaignConfig(scheme="direct", true_alpha=0.01, total_time=10.05,
                         noise=noise, seed=1, replicas=2)
    assert cfg.attempts == 100  # floor of 10.05 / 0.1


def test_direct_campaign_unbiased_and_rmse_identity():
    cfg = CampaignConfig(scheme="direct", true_alpha=0.05, total_time=200.0,
                         noise=NoiseModel(), seed=9, replicas=24)
    s = run_campaign(cfg)
    assert s.attempts == 2000
    assert s.successes == 2000 * 24
    assert s.no_success_replicas == ()
    est = np.array(s.per_replica_estimates, dtype=float)
    assert s.estimate_mean == pytest.approx(est.mean(), abs=0.0)
    assert s.bias == pytest.approx(est.mean() - 0.05, abs=0.0)
    assert s.rmse == pytest.approx(math.sqrt(s.bias ** 2 + s.variance), abs=0.0)
    # sem of the mean over all samples: sqrt(0.5/(2000*24)) in x units
    assert abs(s.bias) < 5.0 * math.sqrt(0.5 / (2000 * 24)) / SQRT2
    assert s.elapsed_model_time == pytest.approx(200.0)


def test_campaign_is_deterministic():
    cfg = CampaignConfig(scheme="direct", true_alpha=0.02, total_time=20.0,
                         noise=NoiseModel(kind="white", sigma_tech=0.1),
                         seed=123, replicas=4)
    a = run_campaign(cfg)
    b = run_campaign(cfg)
    assert a.per_replica_estimates == b.per_replica_estimates
    assert a.rmse == b.rmse


def test_amplified_campaign_estimates_effective_alpha():
    proto = ProtocolConfig(alpha=0.01, t=0.1)
    cfg = CampaignConfig(scheme="amplified", true_alpha=0.01, total_time=1e4,
                         noise=NoiseModel(), seed=7, replicas=16, protocol=proto)
    s = run_campaign(cfg)
    res = run_exact(proto)
    expected = 0.1 * analytic_mean_x(res.conditional_state) / SQRT2
    assert abs(expected - 0.0097067761221231) < 1e-13
    assert abs(s.estimate_mean - expected) < 2e-3
    # success counts concentrate around p * attempts
    p = res.success_probability
    mean_succ = np.mean(s.per_replica_successes)
    assert abs(mean_succ - p * s.attempts) < 5.0 * math.sqrt(p * s.attempts / 16)


def test_all_replicas_can_fail_to_herald():
    proto = ProtocolConfig(alpha=0.0, t=1e-4)
    cfg = CampaignConfig(scheme="amplified", true_alpha=0.0, total_time=1.0,
                         noise=NoiseModel(), seed=5, replicas=3, protocol=proto)
    s = run_campaign(cfg)
    assert s.successes == 0
    assert s.no_success_replicas == (0, 1, 2)
    assert s.per_replica_estimates == (None, None, None)
    assert math.isnan(s.rmse) and math.isnan(s.estimate_mean)


def test_record_runs_alignment():
    proto = ProtocolConfig(alpha=0.01, t=0.1)
    cfg = CampaignConfig(scheme="amplified", true_alpha=0.01, total_time=50.0,
                         noise=NoiseModel(kind="white", sigma_tech=0.05),
                         seed=31, replicas=2, protocol=proto)
    s = run_campaign(cfg, record_runs=True)
    assert s.run_records is not None and len(s.run_records) == 2
    for rec in s.run_records:
        assert rec.heralded.shape == (cfg.attempts,)
        assert rec.x_sample.shape == (cfg.attempts,)
        assert rec.noise_value.shape == (cfg.attempts,)
        mask = rec.heralded.astype(bool)
        assert np.all(np.isnan(rec.x_sample[~mask]))
        assert np.all(np.isfinite(rec.x_sample[mask]))
        assert int(mask.sum()) == s.per_replica_successes[rec.replica]
    # without the flag nothing is recorded
    assert run_campaign(cfg).run_records is None


def test_replica_draw_order_contract():
    # per replica: heralds first, then quadrature for the successes, then the
    # full-length noise series; replica streams come from spawn_key=(replica,)
    proto = ProtocolConfig(alpha=0.01, t=0.1)
    noise = NoiseModel(kind="white", sigma_tech=0.05)
    cfg = CampaignConfig(scheme="amplified", true_alpha=0.01, total_time=30.0,
                         noise=noise, seed=77, replicas=2, protocol=proto)
    s = run_campaign(cfg, record_runs=True)
    res = run_exact(proto)
    for rec in s.run_records:
        rng = _replica_rng(77, rec.replica)
        heralded = rng.random(cfg.attempts) < res.success_probability
        assert np.array_equal(heralded.astype(np.int8), rec.heralded)
        quad = sample_homodyne(res.conditional_state, 0.0, int(heralded.sum()), rng)
        w = noise_series(noise, cfg.attempts, rng)
        assert np.array_equal(w, rec.noise_value)
        assert np.allclose(rec.x_sample[heralded], quad + w[heralded],
                           rtol=0.0, atol=0.0, equal_nan=False)


def test_time_budget():
    tb = time_budget(ProtocolConfig(alpha=0.0005, t=1.0 / 30.0))
    assert 85.0 <= tb.expected_time_per_point <= 95.0
    assert tb.expected_total_time == tb.expected_time_per_point
    tb5 = time_budget(ProtocolConfig(alpha=0.0005, t=1.0 / 30.0), target_points=5)
    assert tb5.expected_total_time == pytest.approx(5.0 * tb.expected_time_per_point)
    with pytest.raises(ValidationError):
        time_budget(ProtocolConfig(alpha=0.0005, t=0.1), run_period=0.0)
