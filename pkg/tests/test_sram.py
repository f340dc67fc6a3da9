import math

import numpy as np
import pytest

from seuforge.devices import default_devices
from seuforge.errors import ValidationError
from seuforge.sram import (
    BIAS_MODES,
    CellDesign,
    CollectionConfig,
    build_cell,
    build_strike,
    butterfly,
    calibrate_collection,
    critical_let,
    detect_flip,
    run_strike,
    static_noise_margin,
    stored_state,
    write_margin,
)

# The calibrated geometry every reproduction run ships with; keep in sync
# with paper-repro.json.
CALIBRATED = CollectionConfig(
    node_cap_f=3.5022786516853935e-15,
    substrate_track_um=0.49386160714285715,
    top_funnel_um=0.4793080357142858,
)


@pytest.fixture(scope="module")
def hold_reports():
    return {t: static_noise_margin(CellDesign(device_type=t), "hold")
            for t in ("1", "2")}


# -- stored state and netlist -------------------------------------------------


def test_stored_state_is_a_clean_zero():
    state = stored_state(CellDesign())
    assert state["ch"] == pytest.approx(0.0, abs=1e-3)
    assert state["cl"] == pytest.approx(0.7, abs=1e-3)


def test_bias_modes_set_the_peripheral_rails():
    design = CellDesign()
    for mode, (wl, bl, blb) in BIAS_MODES.items():
        circ = build_cell(design, mode)
        pinned = {s.node: s.voltage_v for s in circ.sources}
        assert pinned["wl"] == pytest.approx(wl * 0.7)
        assert pinned["bl"] == pytest.approx(bl * 0.7)
        assert pinned["blb"] == pytest.approx(blb * 0.7)


def test_unknown_bias_mode_is_rejected():
    with pytest.raises(ValidationError, match="bias mode"):
        build_cell(CellDesign(), "standby")


def test_custom_device_bank_must_cover_all_roles():
    bank = default_devices("1")
    with pytest.raises(ValidationError, match="roles"):
        CellDesign(devices={"pull_down": bank["pull_down"]})
    swapped = dict(bank)
    swapped["pull_up"], swapped["access"] = bank["access"], bank["pull_up"]
    with pytest.raises(ValidationError, match="p-type"):
        CellDesign(devices=swapped)


def test_design_validation():
    with pytest.raises(ValidationError):
        CellDesign(device_type="3")
    with pytest.raises(ValidationError):
        CellDesign(vdd_v=-0.7)
    with pytest.raises(ValidationError):
        CellDesign(node_cap_f=0.0)


# -- butterfly curves and margins ----------------------------------------------


def test_butterfly_curves_are_inverting_and_rail_to_rail():
    curves = butterfly(CellDesign(), "hold")
    for resp in (curves.response_from_ch, curves.response_from_cl):
        assert resp[0] > 0.7 - 5e-3
        assert resp[-1] < 5e-3
        assert np.all(np.diff(resp) <= 1e-12)


def test_hold_snm_has_two_near_equal_lobes(hold_reports):
    report = hold_reports["1"]
    lobes = [s for s in report.lobe_sizes if s > 1e-6]
    assert len(lobes) == 2
    assert abs(lobes[0] - lobes[1]) < 1e-3
    assert report.snm_v > 0.1


def test_margin_ordering_hold_above_read(hold_reports):
    read = static_noise_margin(CellDesign(), "read")
    assert hold_reports["1"].snm_v > read.snm_v > 0.0


def test_both_flavors_share_every_margin(hold_reports):
    # identical terminal models by construction, so exact agreement
    assert hold_reports["1"].snm_v == hold_reports["2"].snm_v
    read = [static_noise_margin(CellDesign(device_type=t), "read").snm_v
            for t in ("1", "2")]
    assert read[0] == read[1]
    wm = [write_margin(CellDesign(device_type=t)) for t in ("1", "2")]
    assert wm[0] == wm[1]


def test_write_margin_is_positive():
    assert write_margin(CellDesign()) > 0.05


# -- strike construction -------------------------------------------------------


def test_top_strike_charge_anchor():
    # 0.215 um of track at the reference stopping power, paper-compat
    setup = build_strike("top", "2", 1.0)
    want = 1.54 / 106.94 * (0.015 + 0.20)
    assert setup.q_total_pc == pytest.approx(want, rel=1e-9)
    assert setup.q_total_pc == pytest.approx(3.096129e-3, rel=1e-6)


def test_channel_strike_splits_into_two_tracks():
    setup = build_strike("channel", "2", 1.0)
    per_track = 1.54 / 106.94 * 0.030 * 3.0
    assert setup.q_total_pc == pytest.approx(2 * per_track, rel=1e-9)
    assert len(setup.circuit.stimuli) == 2
    endpoints = {(s.from_node, s.to_node) for s in setup.circuit.stimuli}
    assert endpoints == {("cl", "gnd"), ("cl", "bl")}


def test_channel_funnel_only_applies_to_flavor_two():
    q1 = build_strike("channel", "1", 1.0).q_total_pc
    q2 = build_strike("channel", "2", 1.0).q_total_pc
    assert q2 == pytest.approx(3.0 * q1, rel=1e-9)


def test_flavor_one_substrate_strike_has_no_coupling():
    setup = build_strike("substrate", "1", 5.0)
    assert setup.q_total_pc == 0.0
    assert len(setup.circuit.stimuli) == 0


def test_charge_scales_linearly_with_multiple():
    q1 = build_strike("top", "2", 1.0).q_total_pc
    q3 = build_strike("top", "2", 3.0).q_total_pc
    assert q3 == pytest.approx(3.0 * q1, rel=1e-12)


def test_unknown_scenario_rejected():
    with pytest.raises(ValidationError, match="scenario"):
        build_strike("gate", "1", 1.0)
    with pytest.raises(ValidationError):
        build_strike("top", "1", -1.0)


def test_detect_flip_wants_full_inversion():
    init = {"ch": 0.0, "cl": 0.7}
    assert detect_flip(init, {"ch": 0.7, "cl": 0.0}, 0.7)
    assert not detect_flip(init, {"ch": 0.0, "cl": 0.7}, 0.7)
    # inverted but metastable-shallow: not a settled flip
    assert not detect_flip(init, {"ch": 0.36, "cl": 0.34}, 0.7)


# -- strike dynamics with the calibrated geometry ------------------------------


def test_flavor_one_substrate_waveform_is_flat():
    result = run_strike("substrate", "1", 69.0, CALIBRATED)
    assert not result.flipped
    cl = result.waves.node("cl")
    assert np.max(np.abs(cl - cl[0])) < 1e-6


def test_calibrated_channel_thresholds_bracket_the_target():
    assert run_strike("channel", "2", 0.99, CALIBRATED).flipped
    assert not run_strike("channel", "2", 0.93, CALIBRATED).flipped
    assert not run_strike("channel", "1", 2.8, CALIBRATED).flipped


def test_struck_node_dips_before_recovering():
    result = run_strike("top", "2", 0.3, CALIBRATED)
    assert not result.flipped
    cl = result.waves.node("cl")
    assert np.min(cl) < 0.45          # visible droop
    assert cl[-1] > 0.65              # recovered


def test_critical_let_bisects_the_seed_geometry():
    # the uncalibrated 0.05 fF cell upsets well below one reference track
    found = critical_let("channel", "2")
    assert found.status == "ok"
    assert 0.001 < found.multiple < 0.1
    assert run_strike("channel", "2", 1.02 * found.multiple).flipped
    assert not run_strike("channel", "2", 0.98 * found.multiple).flipped


def test_critical_let_reports_no_flip_when_blocked():
    found = critical_let("substrate", "1", CALIBRATED, max_multiple=4.0)
    assert found.status == "no_flip"
    assert math.isinf(found.multiple)


def test_critical_ordering_flavor_one_above_flavor_two():
    crit2 = critical_let("top", "2", CALIBRATED)
    assert crit2.status == "ok"
    hold = run_strike("top", "1", crit2.multiple, CALIBRATED)
    assert not hold.flipped


def test_calibration_confirms_the_shipped_geometry():
    result = calibrate_collection(CALIBRATED)
    assert all(result.checks.values())
    assert result.thresholds["channel"] == pytest.approx(0.96, rel=0.03)
    assert result.thresholds["substrate"] == pytest.approx(0.35, rel=0.03)
    assert result.thresholds["top"] == pytest.approx(0.35, rel=0.03)
    # confirmation should not move the geometry by much
    assert result.config.node_cap_f == pytest.approx(
        CALIBRATED.node_cap_f, rel=0.05)


def test_collection_validation_names_the_field():
    with pytest.raises(ValidationError, match="sigma_s"):
        CollectionConfig(sigma_s=-2e-12)
    with pytest.raises(ValidationError, match="top_funnel_um"):
        CollectionConfig(top_funnel_um=-0.1)
