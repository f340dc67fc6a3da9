"""Command-line front end.

Every subcommand reads an optional JSON run configuration (--config),
writes CSV files into the output directory (--out, default from the
config), and prints a one-line summary. Outputs are byte-deterministic for
a given configuration. Exit codes: 0 success, 1 any runtime or
configuration failure (with a diagnostic on stderr), 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, parse_config
from .devices import drain_current
from .errors import SeuForgeError
from .materials import parse_material
from .output import write_csv
from .report import run_report
from .sram import (
    butterfly,
    calibrate_collection,
    critical_let,
    run_strike,
    static_noise_margin,
    write_margin,
)
from .stopping import csda_range, find_let_max, let_curve

IV_STEP_V = 0.025


def _load_config(args) -> RunConfig:
    if args.config is not None:
        return parse_config(args.config)
    return RunConfig.defaults()


def _out_dir(args, config: RunConfig) -> Path:
    out = args.out if args.out is not None else config.output["directory"]
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _material_tag(text: str) -> str:
    return text.replace(":", "_")


def _cmd_let_curve(args) -> int:
    config = _load_config(args)
    material = parse_material(args.material)
    curve = let_curve(material, conversion=config.conversion(),
                      fit=config.stopping_fit())
    path = write_csv(
        _out_dir(args, config) / f"let_curve_{_material_tag(args.material)}.csv",
        ["energy_MeV", "let_MeVcm2_per_mg", "charge_pC_per_um"],
        zip(curve.energies_mev, curve.let_mev_cm2_mg, curve.charge_pc_per_um),
        config.output["precision"])
    print(f"wrote {path} ({curve.energies_mev.size} points)")
    return 0


def _cmd_let_max(args) -> int:
    config = _load_config(args)
    material = parse_material(args.material)
    peak = find_let_max(material, conversion=config.conversion(),
                        fit=config.stopping_fit())
    print(f"material={args.material} E_peak_MeV={peak.energy_mev:.6g} "
          f"LET_max_MeVcm2_per_mg={peak.let_mev_cm2_mg:.6g} "
          f"charge_pC_per_um={peak.charge_pc_per_um:.6g}")
    return 0


def _cmd_range(args) -> int:
    config = _load_config(args)
    material = parse_material(args.material)
    fit = config.stopping_fit()
    energies = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 5.5, 6.0, 8.0, 10.0]
    rows = [(e, csda_range(e, material, fit=fit)) for e in energies]
    path = write_csv(
        _out_dir(args, config) / f"range_{_material_tag(args.material)}.csv",
        ["energy_MeV", "range_um"], rows, config.output["precision"])
    at_5p5 = dict(rows)[5.5]
    print(f"wrote {path}; range(5.5 MeV) = {at_5p5:.4g} um")
    return 0


def _cmd_iv(args) -> int:
    config = _load_config(args)
    model = config.device_models(args.type)["pull_down"]
    vdd = config.circuit["vdd"]
    steps = int(round(vdd / IV_STEP_V))
    grid = [min(k * IV_STEP_V, vdd) for k in range(steps + 1)]
    rows = [(v_gs, v_ds, drain_current(model, v_gs, v_ds))
            for v_gs in grid for v_ds in grid]
    path = write_csv(_out_dir(args, config) / f"iv_type{args.type}.csv",
                     ["v_gs", "v_ds", "i_d"], rows,
                     config.output["precision"])
    print(f"wrote {path} ({len(rows)} points)")
    return 0


def _cmd_butterfly(args) -> int:
    config = _load_config(args)
    design = config.cell_design(args.type)
    out = _out_dir(args, config)
    stem = f"butterfly_type{args.type}_{args.mode}"
    if args.mode == "write":
        curves = butterfly(design, "write")
        margin = write_margin(design)
        summary = f"mode=write write_margin_mV={1e3 * margin:.4g}"
    else:
        report = static_noise_margin(design, args.mode)
        curves = report.curves
        lobes = "/".join(f"{1e3 * s:.4g}"
                         for s in report.lobe_sizes if s > 1e-6)
        summary = (f"mode={args.mode} snm_mV={1e3 * report.snm_v:.4g} "
                   f"lobes_mV={lobes}")
    path = write_csv(out / f"{stem}.csv",
                     ["v_in_V", "out_ch_to_cl_V", "out_cl_to_ch_V"],
                     zip(curves.forced_v, curves.response_from_ch,
                         curves.response_from_cl),
                     config.output["precision"])
    print(f"wrote {path}; {summary}")
    return 0


def _cmd_strike(args) -> int:
    config = _load_config(args)
    devices = (config.device_models(args.type)
               if config.devices_overridden() else None)
    result = run_strike(args.scenario, args.type, args.let,
                        config.collection(), config.circuit["vdd"],
                        config.circuit["t_stop"], config.circuit["dt"],
                        config.circuit["integrator"], devices)
    nodes = ["ch", "cl"]
    path = write_csv(
        _out_dir(args, config)
        / f"strike_{args.scenario}_type{args.type}_let{args.let:g}.csv",
        ["time_s"] + [f"{n}_V" for n in nodes],
        zip(result.waves.times_s, *(result.waves.node(n) for n in nodes)),
        config.output["precision"])
    print(f"wrote {path}; flip={'true' if result.flipped else 'false'} "
          f"q_total_pC={result.q_total_pc:.6g}")
    return 0


def _cmd_critical_let(args) -> int:
    config = _load_config(args)
    devices = (config.device_models(args.type)
               if config.devices_overridden() else None)
    found = critical_let(args.scenario, args.type, config.collection(),
                         config.circuit["vdd"], config.circuit["t_stop"],
                         config.circuit["dt"],
                         method=config.circuit["integrator"], devices=devices)
    path = write_csv(
        _out_dir(args, config)
        / f"critical_let_{args.scenario}_type{args.type}.csv",
        ["scenario", "device_type", "let_crit_multiple", "status"],
        [(found.scenario, found.device_type, found.multiple, found.status)],
        config.output["precision"])
    print(f"wrote {path}; let_crit_multiple={found.multiple:.6g} "
          f"status={found.status} runs={found.runs}")
    return 0


def _cmd_calibrate(args) -> int:
    config = _load_config(args)
    result = calibrate_collection(config.collection(),
                                  vdd_v=config.circuit["vdd"],
                                  t_stop_s=config.circuit["t_stop"],
                                  dt_s=config.circuit["dt"])
    calibrated = config.with_collection(result.config)
    path = _out_dir(args, config) / "calibrated.json"
    path.write_text(calibrated.dumps(), newline="\n")
    pieces = [f"{name}={value:.5g}" for name, value in result.thresholds.items()]
    print(f"wrote {path}; thresholds: {' '.join(pieces)}; "
          f"runs={result.runs}; holds={'ok' if all(result.checks.values()) else 'FAIL'}")
    return 0


def _cmd_report(args) -> int:
    config = _load_config(args)
    result = run_report(config, _out_dir(args, config))
    for (device_type, mode), value in sorted(result.margins.items()):
        print(f"flavor {device_type} {mode} margin: {1e3 * value:.2f} mV")
    print()
    print(result.table())
    print(f"\n{len(result.files)} files in {result.elapsed_s:.1f} s")
    if not result.all_passed():
        print("error: threshold relations failed", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seuforge",
        description=("Alpha-particle LET curves and storage-cell upset "
                     "simulation for two transistor flavors."))
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH",
                       help="JSON run configuration")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (default from config)")
        p.set_defaults(handler=handler)
        return p

    def add_material(p):
        p.add_argument("--material", default="si",
                       help="si, ge, or sige:<x> (default si)")

    def add_type(p):
        p.add_argument("--type", choices=("1", "2"), default="2",
                       help="storage-transistor flavor (default 2)")

    p = add("let-curve", _cmd_let_curve, "LET vs energy table")
    add_material(p)
    p = add("let-max", _cmd_let_max, "Bragg-peak location and height")
    add_material(p)
    p = add("range", _cmd_range, "continuous-slowing-down ranges")
    add_material(p)
    p = add("iv", _cmd_iv, "pull-down transistor output characteristics")
    add_type(p)
    p = add("butterfly", _cmd_butterfly, "transfer curves and noise margin")
    add_type(p)
    p.add_argument("--mode", choices=("hold", "read", "write"),
                   default="hold", help="bias mode (default hold)")
    p = add("strike", _cmd_strike, "single-strike transient waveforms")
    add_type(p)
    p.add_argument("--scenario", choices=("channel", "substrate", "top"),
                   required=True, help="strike location")
    p.add_argument("--let", type=float, required=True, metavar="MULTIPLE",
                   help="stopping power as a multiple of the reference peak")
    p = add("critical-let", _cmd_critical_let,
            "smallest strike multiple that flips the cell")
    add_type(p)
    p.add_argument("--scenario", choices=("channel", "substrate", "top"),
                   required=True, help="strike location")
    p = add("calibrate", _cmd_calibrate,
            "fit collection geometry to the flavor-2 thresholds")
    add("report", _cmd_report, "full reproduction suite with summary table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SeuForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
