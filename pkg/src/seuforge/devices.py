"""Charge-sheet compact model for the stacked nanosheet FETs.

Interpolated forward/reverse channel currents give one smooth expression
from subthreshold through strong inversion:

    I = fins * i_spec * (F(u_s) - F(u_d))
    F(u) = ln^2(1 + exp(u))
    u_s = (v_gs - v_t_eff) / (2 * n_slope * phi_t)
    u_d = (v_gs - v_ds - v_t_eff) / (2 * n_slope * phi_t)

Source and drain enter symmetrically, so the expression is analytically
antisymmetric under a terminal swap; negative v_ds is additionally routed
through an explicit swap branch, which makes the antisymmetry hold bit for
bit. Drain-induced barrier lowering shifts the threshold by a smoothed
absolute value of v_ds,

    v_t_eff = v_t - lambda_dibl * (sqrt(v_ds^2 + (2 phi_t)^2) - 2 phi_t),

keeping the model infinitely differentiable across v_ds = 0. p-type
devices mirror the n-type expression through sign reversal, and all
derivatives are analytic.

The default parameter set models both storage-transistor flavors of the
simulated cell; they share identical terminal characteristics (the flavors
differ only in the charge-collection geometry, handled in the sram module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, ValidationError

#: Thermal voltage at 300 K, volts.
PHI_T_V = 0.02585

#: Bias window accepted by the public evaluation functions, volts.
BIAS_LIMIT_V = 2.0

DEFAULT_V_T = 0.25
DEFAULT_N_SLOPE = 1.17
#: Gate and drain bias at which per-fin drive currents are anchored, volts.
ANCHOR_BIAS_V = 0.7
#: Drive current of a single n-type fin at v_gs = v_ds = 0.7 V, amps.
SINGLE_FIN_DRIVE_A = 10e-6
#: p-type drive relative to n-type at the same overdrive.
P_TO_N_DRIVE_RATIO = 0.6


def _softplus(s: float) -> float:
    if s > 0.0:
        return s + math.log1p(math.exp(-s))
    return math.log1p(math.exp(s))


def _sigmoid(s: float) -> float:
    if s >= 0.0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def _normalized_drive(v_gs: float, v_ds: float, v_t: float,
                      n_slope: float, lambda_dibl: float) -> float:
    den = 2.0 * n_slope * PHI_T_V
    c = 2.0 * PHI_T_V
    v_t_eff = v_t - lambda_dibl * (math.hypot(v_ds, c) - c)
    u_s = (v_gs - v_t_eff) / den
    u_d = (v_gs - v_ds - v_t_eff) / den
    return _softplus(u_s) ** 2 - _softplus(u_d) ** 2


_NORM_AT_NOMINAL = _normalized_drive(0.7, 0.7, DEFAULT_V_T, DEFAULT_N_SLOPE, 0.0)
#: Specific current making one default n-type fin carry 10 uA at 0.7/0.7 V.
N_I_SPEC_A = SINGLE_FIN_DRIVE_A / _NORM_AT_NOMINAL
P_I_SPEC_A = P_TO_N_DRIVE_RATIO * N_I_SPEC_A


@dataclass(frozen=True)
class DeviceModel:
    """Compact-model parameter set for one transistor.

    fins counts the electrically active channels; an access transistor with
    one of its two fins tied off is modeled as fins=1. device_type is a
    cell-flavor tag ("1" or "2") carried for reporting; it does not alter
    the terminal characteristics.
    """

    polarity: str
    v_t: float = DEFAULT_V_T
    n_slope: float = DEFAULT_N_SLOPE
    i_spec: float = N_I_SPEC_A
    fins: int = 1
    lambda_dibl: float = 0.0
    device_type: str = "1"

    def __post_init__(self) -> None:
        if self.polarity not in ("n", "p"):
            raise ValidationError(f"polarity must be 'n' or 'p', got {self.polarity!r}")
        if self.i_spec <= 0.0:
            raise ValidationError("i_spec must be positive")
        if self.n_slope <= 0.0:
            raise ValidationError("n_slope must be positive")
        if not isinstance(self.fins, int) or self.fins < 1:
            raise ValidationError("fins must be a positive integer")
        if not 0.0 <= self.lambda_dibl < 1.0:
            raise ValidationError("lambda_dibl must be in [0, 1)")
        if self.device_type not in ("1", "2"):
            raise ValidationError("device_type must be '1' or '2'")


def _eval_n(model: DeviceModel, vd: float, vg: float, vs: float):
    """n-type terminal evaluation: (i_d, di/dVd, di/dVg, di/dVs)."""
    if vd < vs:
        i, ddd, ddg, dds = _eval_n(model, vs, vg, vd)
        return -i, -dds, -ddg, -ddd
    v_gs = vg - vs
    v_ds = vd - vs
    k = model.fins * model.i_spec
    den = 2.0 * model.n_slope * PHI_T_V
    c = 2.0 * PHI_T_V
    root = math.hypot(v_ds, c)
    v_t_eff = model.v_t - model.lambda_dibl * (root - c)
    u_s = (v_gs - v_t_eff) / den
    u_d = (v_gs - v_ds - v_t_eff) / den
    sp_s, sp_d = _softplus(u_s), _softplus(u_d)
    i = k * (sp_s * sp_s - sp_d * sp_d)
    df = 2.0 * sp_s * _sigmoid(u_s)     # dF/du at u_s
    dr = 2.0 * sp_d * _sigmoid(u_d)
    gm = k * (df - dr) / den
    barrier = model.lambda_dibl * v_ds / root   # d(v_t shift)/d(v_ds)
    gds = k * (df * barrier + dr * (1.0 - barrier)) / den
    return i, gds, gm, -(gm + gds)


def terminal_current(model: DeviceModel, vd: float, vg: float, vs: float):
    """Current into the drain terminal and its three terminal derivatives.

    Returns (i_d, di/dVd, di/dVg, di/dVs). This is the solver-facing entry
    point; it performs no bias-window validation.
    """
    if model.polarity == "n":
        return _eval_n(model, vd, vg, vs)
    i, ddd, ddg, dds = _eval_n(model, -vd, -vg, -vs)
    return -i, ddd, ddg, dds


def _check_window(v_gs: float, v_ds: float) -> None:
    if abs(v_gs) > BIAS_LIMIT_V or abs(v_ds) > BIAS_LIMIT_V:
        raise DomainError(
            f"bias outside +/-{BIAS_LIMIT_V:g} V window: "
            f"v_gs={v_gs!r}, v_ds={v_ds!r}"
        )


def drain_current(model: DeviceModel, v_gs: float, v_ds: float) -> float:
    """Drain current in amps at the given source-referenced bias."""
    _check_window(v_gs, v_ds)
    i, _, _, _ = terminal_current(model, v_ds, v_gs, 0.0)
    return i


def drain_current_derivatives(model: DeviceModel, v_gs: float,
                              v_ds: float) -> tuple[float, float, float]:
    """(i_d, gm, gds) with analytic derivatives.

    gm = di/dv_gs and gds = di/dv_ds, both source-referenced.
    """
    _check_window(v_gs, v_ds)
    i, ddd, ddg, _ = terminal_current(model, v_ds, v_gs, 0.0)
    return i, ddg, ddd


def subthreshold_swing_mv_dec(model: DeviceModel) -> float:
    """Ideal subthreshold swing n_slope * phi_t * ln(10), in mV/decade."""
    return model.n_slope * PHI_T_V * math.log(10.0) * 1e3


def device_from_drive(polarity: str, drive_a: float, *,
                      v_t: float = DEFAULT_V_T,
                      n_slope: float = DEFAULT_N_SLOPE,
                      fins: int = 1, lambda_dibl: float = 0.0,
                      device_type: str = "1") -> DeviceModel:
    """Model whose per-fin on-current magnitude equals drive_a at the
    anchor bias (|v_gs| = |v_ds| = ANCHOR_BIAS_V).

    Solving i_spec from the anchor keeps the drive calibrated when the
    threshold, slope, or drain-feedback parameters are overridden.
    """
    if drive_a <= 0.0:
        raise ValidationError(f"drive_a must be positive, got {drive_a}")
    norm = _normalized_drive(ANCHOR_BIAS_V, ANCHOR_BIAS_V, v_t, n_slope,
                             lambda_dibl)
    return DeviceModel(polarity=polarity, v_t=v_t, n_slope=n_slope,
                       i_spec=drive_a / norm, fins=fins,
                       lambda_dibl=lambda_dibl, device_type=device_type)


def default_devices(device_type: str = "1") -> dict[str, DeviceModel]:
    """Models for the three cell roles.

    pull_down: n-type, two fins; pull_up: p-type, one fin; access: n-type
    with one of its two fins tied off, so electrically one fin.
    """
    n = DeviceModel(polarity="n", device_type=device_type)
    p = DeviceModel(polarity="p", i_spec=P_I_SPEC_A, device_type=device_type)
    return {
        "pull_down": replace(n, fins=2),
        "pull_up": replace(p, fins=1),
        "access": replace(n, fins=1),
    }
