import math

import pytest
from hypothesis import given, strategies as st

from seuforge.devices import (
    DeviceModel,
    P_I_SPEC_A,
    PHI_T_V,
    default_devices,
    drain_current,
    drain_current_derivatives,
    subthreshold_swing_mv_dec,
    terminal_current,
)
from seuforge.errors import DomainError, ValidationError

NFET = DeviceModel(polarity="n")
PFET = DeviceModel(polarity="p", i_spec=P_I_SPEC_A)


def test_single_fin_drive_current():
    # i_spec is defined so one n-type fin carries exactly 10 uA at 0.7/0.7 V.
    assert drain_current(NFET, 0.7, 0.7) == pytest.approx(10e-6, rel=1e-12)


def test_pfet_mirrors_nfet_at_reduced_drive():
    i_p = drain_current(PFET, -0.7, -0.7)
    assert i_p == pytest.approx(-6e-6, rel=1e-12)


def test_current_scales_linearly_with_fins():
    two = DeviceModel(polarity="n", fins=2)
    for v_gs, v_ds in [(0.7, 0.7), (0.3, 0.1), (0.5, -0.4)]:
        assert drain_current(two, v_gs, v_ds) == pytest.approx(
            2.0 * drain_current(NFET, v_gs, v_ds), rel=1e-12
        )


def _v_gs_at_current(model: DeviceModel, target: float, v_ds: float) -> float:
    lo, hi = -0.5, 0.7
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if drain_current(model, mid, v_ds) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_subthreshold_swing():
    # Two decades of current deep below threshold give the ideal swing
    # n_slope * phi_t * ln(10), about 69.6 mV/decade.
    v_lo = _v_gs_at_current(NFET, 1e-13, 0.7)
    v_hi = _v_gs_at_current(NFET, 1e-11, 0.7)
    measured = (v_hi - v_lo) / 2.0 * 1e3
    ideal = subthreshold_swing_mv_dec(NFET)
    assert ideal == pytest.approx(69.64, abs=0.2)
    assert measured == pytest.approx(ideal, rel=0.02)


def test_off_state_leakage_is_small():
    assert 0.0 < drain_current(NFET, 0.0, 0.7) < 1e-9


def test_saturation_current_flat_without_dibl():
    i_lo = drain_current(NFET, 0.1, 0.3)
    i_hi = drain_current(NFET, 0.1, 0.7)
    assert i_hi == pytest.approx(i_lo, rel=1e-4)


def test_dibl_raises_subthreshold_current():
    dibl = DeviceModel(polarity="n", lambda_dibl=0.1)
    i_lo = drain_current(dibl, 0.1, 0.3)
    i_hi = drain_current(dibl, 0.1, 0.7)
    # 0.1 V/V of drain feedback over 0.4 V of v_ds shifts the effective
    # threshold by 40 mV, roughly half a decade here.
    assert i_hi / i_lo > math.exp(0.5 * 0.04 / (dibl.n_slope * PHI_T_V))


def test_monotone_in_v_gs():
    prev = -1.0
    for k in range(41):
        v_gs = -1.0 + 0.05 * k
        i = drain_current(NFET, v_gs, 0.7)
        assert i > prev
        prev = i


def test_role_strength_ordering():
    devices = default_devices()
    vdd = 0.7
    i_pd = drain_current(devices["pull_down"], vdd, vdd)
    i_acc = drain_current(devices["access"], vdd, vdd)
    i_pu = abs(drain_current(devices["pull_up"], -vdd, -vdd))
    assert i_pd > i_acc > i_pu
    assert i_pd == pytest.approx(20e-6, rel=1e-12)
    assert i_pu == pytest.approx(6e-6, rel=1e-12)


def test_device_type_tag_does_not_change_currents():
    t2 = default_devices("2")
    t1 = default_devices("1")
    for role in t1:
        assert drain_current(t1[role], 0.5, 0.4) == drain_current(t2[role], 0.5, 0.4)


@given(
    v_gs=st.floats(min_value=-1.0, max_value=1.0),
    v_ds=st.floats(min_value=-1.0, max_value=0.0),
)
def test_terminal_swap_antisymmetry_is_exact(v_gs, v_ds):
    # For v_ds <= 0 the swap branch rebuilds the mirrored forward call
    # bit for bit, so the antisymmetry holds with float equality.
    forward = drain_current(NFET, v_gs, v_ds)
    swapped = drain_current(NFET, v_gs - v_ds, -v_ds)
    assert forward == -swapped


@given(
    v_gs=st.floats(min_value=-1.0, max_value=1.0),
    v_ds=st.floats(min_value=0.0, max_value=1.0),
)
def test_terminal_swap_antisymmetry_both_directions(v_gs, v_ds):
    # Going the other way reassociates v_gs - v_ds + v_ds, so only
    # rounding-level agreement is guaranteed.
    forward = drain_current(NFET, v_gs, v_ds)
    swapped = drain_current(NFET, v_gs - v_ds, -v_ds)
    assert math.isclose(forward, -swapped, rel_tol=1e-11, abs_tol=1e-30)


def test_swap_antisymmetry_with_dibl():
    dibl = DeviceModel(polarity="n", lambda_dibl=0.08)
    for v_gs, v_ds in [(0.5, -0.3), (0.2, -0.7), (0.9, -0.05)]:
        assert drain_current(dibl, v_gs, v_ds) == -drain_current(
            dibl, v_gs - v_ds, -v_ds
        )


def _fd_check(model: DeviceModel, v_gs: float, v_ds: float) -> None:
    # h = 1e-4 balances truncation (about (h/phi_t)^2 relative) against
    # subtraction noise in the numerator; deep in saturation gds is six
    # decades below the current scale and a smaller h drowns it in rounding.
    h = 1e-4
    i, gm, gds = drain_current_derivatives(model, v_gs, v_ds)
    fd_gm = (drain_current(model, v_gs + h, v_ds)
             - drain_current(model, v_gs - h, v_ds)) / (2 * h)
    fd_gds = (drain_current(model, v_gs, v_ds + h)
              - drain_current(model, v_gs, v_ds - h)) / (2 * h)
    # Rounding the currents to double precision leaves noise of order
    # eps * |i| in the FD numerator; below that the comparison is void.
    noise = 8.0 * 2.220446049250313e-16 * abs(i) / (2 * h)
    tol_gm = 1e-4 * abs(fd_gm) + noise + 1e-18
    tol_gds = 1e-4 * abs(fd_gds) + noise + 1e-18
    assert abs(gm - fd_gm) <= tol_gm, (v_gs, v_ds, gm, fd_gm)
    assert abs(gds - fd_gds) <= tol_gds, (v_gs, v_ds, gds, fd_gds)


@pytest.mark.parametrize(
    "model",
    [NFET, PFET, DeviceModel(polarity="n", lambda_dibl=0.05)],
    ids=["n", "p", "n-dibl"],
)
def test_derivatives_match_finite_differences(model):
    for iv in range(21):
        for jv in range(21):
            _fd_check(model, -1.0 + 0.1 * iv, -1.0 + 0.1 * jv)


def test_source_derivative_closes_kcl():
    # The three terminal derivatives of a floating device must sum to zero:
    # shifting all terminals together changes nothing.
    for model in (NFET, PFET):
        _, ddd, ddg, dds = terminal_current(model, 0.4, 0.6, 0.1)
        assert ddd + ddg + dds == pytest.approx(0.0, abs=1e-18)


@pytest.mark.parametrize("model", [NFET, DeviceModel(polarity="n", lambda_dibl=0.05)],
                         ids=["n", "n-dibl"])
def test_smooth_across_zero_v_ds(model):
    # Second differences of a fine v_ds sweep stay tiny; a seam jump or a
    # kink at the terminal-swap boundary would show up as a spike.
    h = 1e-4
    samples = [drain_current(model, 0.5, -0.05 + h * k) for k in range(1001)]
    scale = max(abs(s) for s in samples)
    second = [abs(samples[k + 1] - 2 * samples[k] + samples[k - 1])
              for k in range(1, 1000)]
    assert max(second) < 1e-3 * scale


def test_smooth_across_threshold():
    h = 1e-4
    samples = [drain_current(NFET, 0.2 + h * k, 0.7) for k in range(1001)]
    scale = max(abs(s) for s in samples)
    second = [abs(samples[k + 1] - 2 * samples[k] + samples[k - 1])
              for k in range(1, 1000)]
    assert max(second) < 1e-3 * scale


def test_bias_window_enforced():
    with pytest.raises(DomainError):
        drain_current(NFET, 2.5, 0.5)
    with pytest.raises(DomainError):
        drain_current(NFET, 0.5, -2.1)
    with pytest.raises(DomainError):
        drain_current_derivatives(NFET, 0.0, 2.0001)


def test_model_validation():
    with pytest.raises(ValidationError):
        DeviceModel(polarity="x")
    with pytest.raises(ValidationError):
        DeviceModel(polarity="n", fins=0)
    with pytest.raises(ValidationError):
        DeviceModel(polarity="n", i_spec=0.0)
    with pytest.raises(ValidationError):
        DeviceModel(polarity="n", lambda_dibl=2.0)
    with pytest.raises(ValidationError):
        DeviceModel(polarity="n", device_type="3")
