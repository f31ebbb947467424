import math
import warnings

import numpy as np
import pytest

from hal.errors import ImpossibleOutcomeError, ValidationError
from hal.fock_core import fidelity, number_state, to_density, tensor_product
from hal.optics_ops import BeamSplitter, HeraldModel, apply_beam_splitter, herald_click
from hal.protocol import (
    ProtocolConfig,
    ROW_COLUMNS,
    RegimeWarning,
    run_exact,
    run_first_order,
    sweep,
    target_state,
)

# reference values for alpha=0.01, t=0.1 (truncated input, ideal herald),
# computed with the dense matrix-exponential oracle in hal.validate
P_REF = 0.01009503049695031
C0_REF = 0.99523231428662884
C1_REF = 0.097532766800089626
P_COHERENT_REF = 0.010095030640504260


def test_config_validation():
    with pytest.raises(ValidationError):
        ProtocolConfig(alpha=0.01, t=0.0)
    with pytest.raises(ValidationError):
        ProtocolConfig(alpha=0.01, t=1.0)
    with pytest.raises(ValidationError):
        ProtocolConfig(alpha=0.01, t=0.1, input_kind="squeezed")
    with pytest.raises(ValidationError):
        ProtocolConfig(alpha=0.01, t=0.1, source_efficiency=1.2)
    cfg = ProtocolConfig(alpha=0.01 + 0.002j, t=0.1)
    assert cfg.alpha.im == 0.002
    assert cfg.in_recommended_regime
    assert not ProtocolConfig(alpha=0.05, t=0.1).in_recommended_regime
    assert not ProtocolConfig(alpha=0.01, t=0.5).in_recommended_regime


def test_regime_warning():
    with pytest.warns(RegimeWarning):
        run_first_order(0.09, 0.1)
    with pytest.warns(RegimeWarning):
        run_exact(ProtocolConfig(alpha=0.002, t=0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run_first_order(0.01, 0.1)  # in regime: must stay silent


def test_first_order_closed_form():
    res = run_first_order(0.01, 0.1)
    assert res.gain == 10.0  # 1/t, exact
    assert abs(res.success_probability - 0.0101) < 1e-15
    assert res.fidelity_to_target == 1.0
    assert res.leading_order.gain == 10.0
    assert abs(res.leading_order.p - 0.01) < 1e-15
    c = res.conditional_state.amplitudes
    assert abs(c[1] / c[0] - 0.1) < 1e-15  # alpha/t


def test_first_order_vacuum_input():
    res = run_first_order(0.0, 0.2)
    assert abs(res.success_probability - 0.04) < 1e-15
    assert abs(res.conditional_state.amplitudes[0] - 1.0) < 1e-15
    assert res.gain == 5.0


def test_first_order_gain_thirty():
    res = run_first_order(0.0005, 1.0 / 30.0)
    assert abs(res.success_probability - (1.0 / 900.0 + 0.0005 ** 2)) < 1e-15
    assert abs(res.gain - 30.0) < 1e-12


def test_exact_truncated_reference_point():
    res = run_exact(ProtocolConfig(alpha=0.01, t=0.1))
    assert abs(res.success_probability - P_REF) < 1e-15
    c = res.conditional_state.amplitudes
    assert abs(c[0] - C0_REF) < 1e-13
    assert abs(c[1] - C1_REF) < 1e-13
    assert abs(res.gain * 0.1 - 0.98) < 1e-12


def test_exact_gain_law():
    res = run_exact(ProtocolConfig(alpha=0.02, t=0.2))
    assert abs(res.gain * 0.2 - (1.0 - 2.0 * 0.04)) < 1e-9


def test_exact_coherent_input():
    res = run_exact(ProtocolConfig(alpha=0.01, t=0.1, input_kind="coherent"))
    assert abs(res.success_probability - P_COHERENT_REF) < 1e-14
    assert abs(res.gain * 0.1 - 0.98) < 1e-9
    assert res.fidelity_to_target >= 1.0 - 10.0 * (0.1 ** 2 + 0.01 ** 2) ** 2


def test_exact_probability_matches_independent_povm_path():
    # the pure fast path must agree with the density-operator herald to 1e-12
    config = ProtocolConfig(alpha=0.01, t=0.1)
    p_pure = run_exact(config).success_probability
    psi = tensor_product(
        _signal(config.alpha.as_complex(), config.cutoff), number_state(1, config.cutoff)
    )
    rho = apply_beam_splitter(to_density(psi), BeamSplitter(config.t))
    p_dens, _ = herald_click(rho, config.herald)
    assert abs(p_pure - p_dens) < 1e-12


def _signal(alpha, cutoff):
    amp = np.zeros(cutoff + 1, dtype=np.complex128)
    amp[0] = 1.0
    amp[1] = alpha
    from hal.fock_core import PureState

    return PureState(amp, cutoff, 1).normalized()


def test_vacuum_amplifies_to_vacuum():
    res = run_exact(ProtocolConfig(alpha=0.0, t=0.1))
    assert abs(res.success_probability - 0.01) < 1e-12
    assert math.isnan(res.gain)
    assert abs(res.fidelity_to_target - 1.0) < 1e-12


def test_source_vacuum_transparency():
    # p1 < 1, no dark counts, alpha = 0: a click can only come from the
    # source photon, so the conditional state is exactly vacuum
    herald = HeraldModel(read_efficiency=0.7, dark_count=0.0)
    res = run_exact(ProtocolConfig(alpha=0.0, t=0.1, source_efficiency=0.6, herald=herald))
    vac = number_state(0, 12)
    assert abs(res.fidelity_to_target - 1.0) < 1e-10
    assert abs(fidelity(res.conditional_state, vac) - 1.0) < 1e-10


def test_source_efficiency_probability_formula():
    # at alpha = 0, resolving eta = 1: p = p1 t^2 (1 - p_d) + p_d (1 - p1 t^2)
    p1, pd, t = 0.9, 1e-5, 0.1
    herald = HeraldModel(read_efficiency=1.0, dark_count=pd)
    res = run_exact(ProtocolConfig(alpha=0.0, t=t, source_efficiency=p1, herald=herald))
    want = p1 * t * t * (1 - pd) + pd * (1 - p1 * t * t)
    assert abs(res.success_probability - want) < 1e-12


def test_dark_count_admixture_stays_normalized():
    herald = HeraldModel(read_efficiency=0.5, dark_count=0.01)
    res = run_exact(ProtocolConfig(alpha=0.01, t=0.1, source_efficiency=0.95, herald=herald))
    assert abs(res.conditional_state.trace() - 1.0) < 1e-12
    assert 0.0 <= res.success_probability <= 1.0
    assert 0.0 <= res.fidelity_to_target <= 1.0


def test_impossible_herald():
    # no photon anywhere and no dark counts: the click event has measure zero
    herald = HeraldModel(read_efficiency=0.5, dark_count=0.0)
    with pytest.raises(ImpossibleOutcomeError):
        run_exact(ProtocolConfig(alpha=0.0, t=0.1, source_efficiency=0.0, herald=herald))


def test_first_order_agreement_bound():
    # |exact - first_order| relative, for p and gain, <= c (t^2 + |alpha/t|^2)
    worst = 0.0
    for t in (0.05, 0.1, 0.2):
        for ratio in (0.05, 0.1, 0.2):
            alpha = ratio * t
            ex = run_exact(ProtocolConfig(alpha=alpha, t=t))
            fo = run_first_order(alpha, t)
            scale = t * t + ratio * ratio
            dp = abs(ex.success_probability - fo.success_probability) / fo.success_probability
            dg = abs(ex.gain - fo.gain) / fo.gain
            worst = max(worst, dp / scale, dg / scale)
    assert worst <= 3.0


def test_gain_convergence_as_t_shrinks():
    ts = [0.2, 0.1, 0.05, 0.02]
    gains = []
    fids = []
    for t in ts:
        res = run_exact(ProtocolConfig(alpha=0.1 * t, t=t))
        gains.append(res.gain * t)
        fids.append(res.fidelity_to_target)
    assert all(b > a for a, b in zip(gains, gains[1:]))
    assert all(b >= a for a, b in zip(fids, fids[1:]))
    assert abs(gains[-1] - 1.0) < 2e-3
    assert fids[-1] > 1.0 - 1e-6


def test_target_state():
    psi = target_state(0.01, 0.1, cutoff=3)
    assert abs(psi.norm() - 1.0) < 1e-15
    assert abs(psi.amplitudes[1] / psi.amplitudes[0] - 0.1) < 1e-15


def test_sweep_single_point_equals_run_exact():
    base = ProtocolConfig(alpha=0.01, t=0.1)
    rows = sweep(base, {"t": [0.1]})
    assert len(rows) == 1
    res = run_exact(base)
    assert rows[0]["success_prob"] == res.success_probability
    assert rows[0]["gain"] == res.gain
    assert rows[0]["error_code"] == ""
    assert list(rows[0].keys()) == list(ROW_COLUMNS)


def test_sweep_row_major_order():
    base = ProtocolConfig(alpha=0.0, t=0.1)
    rows = sweep(base, {"t": [0.1, 0.2], "alpha": [0.0, 0.01]})
    got = [(r["t"], r["alpha_re"]) for r in rows]
    assert got == [(0.1, 0.0), (0.1, 0.01), (0.2, 0.0), (0.2, 0.01)]


def test_sweep_t_axis_probability_law():
    base = ProtocolConfig(alpha=0.0, t=0.1)
    rows = sweep(base, {"t": [0.05, 0.1, 0.2]})
    for row in rows:
        assert abs(row["success_prob"] - row["t"] ** 2) < 1e-12
        assert row["leading_p"] == row["t"] ** 2


def test_sweep_records_errors_in_row():
    base = ProtocolConfig(alpha=0.01, t=0.1, source_efficiency=0.0,
                          herald=HeraldModel(dark_count=0.0))
    rows = sweep(base, {"alpha": [0.01, 0.0]})
    assert rows[0]["error_code"] == ""
    assert rows[1]["error_code"] == "impossible"
    assert math.isnan(rows[1]["success_prob"])
    assert rows[1]["leading_gain"] == 10.0


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ValidationError):
        sweep(ProtocolConfig(alpha=0.0, t=0.1), {"frequency": [1.0]})


def test_sweep_herald_axes():
    base = ProtocolConfig(alpha=0.01, t=0.1)
    rows = sweep(base, {"eta_r": [1.0, 0.5], "p_d": [0.0, 1e-4]})
    assert len(rows) == 4
    assert rows[0]["eta_r"] == 1.0 and rows[0]["p_d"] == 0.0
    assert rows[3]["eta_r"] == 0.5 and rows[3]["p_d"] == 1e-4
    # lower read efficiency cannot increase the click probability
    assert rows[2]["success_prob"] < rows[0]["success_prob"]


def test_sweep_is_quiet(recwarn):
    sweep(ProtocolConfig(alpha=0.0, t=0.1), {"t": [0.5, 0.6]})
    assert not [w for w in recwarn.list if issubclass(w.category, RegimeWarning)]
