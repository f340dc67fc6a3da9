"""One-command reproduction of the radiation-hardness comparison.

Runs the stopping-power summary, the stability margins, and the full strike
matrix with the configured collection geometry, writes every table as CSV
(plus a rendered figure next to each), and grades the threshold relations
the calibrated setup is expected to satisfy:

* channel, flavor 2: critical multiple at or below 1.0; flavor 1 holds 2.8.
* substrate, flavor 2: critical multiple within 10% of 0.35; flavor 1 shows
  under 1 uV of node motion at 69.
* top, flavor 2: critical multiple within 10% of 0.35; flavor 1 holds 6.9.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import figures
from .config import RunConfig
from .output import write_csv
from .sram import (
    HOLD_REQUIREMENTS,
    SCENARIOS,
    critical_let,
    run_strike,
    static_noise_margin,
    write_margin,
)
from .stopping import csda_range, find_let_max, let_curve


@dataclass(frozen=True)
class ReportRow:
    name: str
    value: str
    requirement: str
    passed: bool


@dataclass(frozen=True)
class ReportResult:
    rows: tuple[ReportRow, ...]
    margins: dict
    files: tuple[Path, ...]
    elapsed_s: float

    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def table(self) -> str:
        heads = ("relation", "measured", "required", "status")
        body = [(r.name, r.value, r.requirement,
                 "PASS" if r.passed else "FAIL") for r in self.rows]
        widths = [max(len(h), *(len(row[i]) for row in body))
                  for i, h in enumerate(heads)]
        def fmt(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        lines = [fmt(heads), fmt(tuple("-" * w for w in widths))]
        lines += [fmt(row) for row in body]
        return "\n".join(lines)


def thread_budget(n_tasks: int, threads: int | None = None) -> int:
    """Worker count for internal sweeps, capped by SEU_FORGE_THREADS."""
    if threads is None:
        raw = os.environ.get("SEU_FORGE_THREADS", "0")
        try:
            threads = int(raw)
        except ValueError:
            threads = 0
        if threads < 0:
            threads = 0
    if threads == 0:
        threads = os.cpu_count() or 1
    return max(1, min(threads, n_tasks))


def _strike_files(result, out_dir: Path, precision: int) -> list[Path]:
    stem = (f"strike_{result.scenario}_type{result.device_type}"
            f"_let{result.let_multiple:g}")
    nodes = ["ch", "cl"]
    rows = zip(result.waves.times_s,
               *(result.waves.node(n) for n in nodes))
    csv_path = write_csv(out_dir / f"{stem}.csv",
                         ["time_s"] + [f"{n}_V" for n in nodes],
                         rows, precision)
    fig_path = figures.save_waveforms(
        result.waves, out_dir / f"{stem}.png",
        label=(f"{result.scenario} strike, flavor {result.device_type}, "
               f"{result.let_multiple:g}x reference"),
        nodes=nodes)
    return [csv_path, fig_path]


def run_report(config: RunConfig, out_dir: str | Path,
               threads: int | None = None) -> ReportResult:
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    precision = config.output["precision"]
    files: list[Path] = []

    # --- stopping power and ranges -------------------------------------------
    material = config.material()
    fit = config.stopping_fit()
    conversion = config.conversion()
    curve = let_curve(material, conversion=conversion, fit=fit)
    peak = find_let_max(material, conversion=conversion, fit=fit)
    files.append(write_csv(
        out_dir / "let_curve.csv",
        ["energy_MeV", "let_MeVcm2_per_mg", "charge_pC_per_um"],
        zip(curve.energies_mev, curve.let_mev_cm2_mg, curve.charge_pc_per_um),
        precision))
    files.append(figures.save_let_curve(curve, out_dir / "let_curve.png", peak))
    range_grid = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 5.5, 6.0, 8.0, 10.0]
    files.append(write_csv(
        out_dir / "range.csv", ["energy_MeV", "range_um"],
        ((e, csda_range(e, material, fit=fit)) for e in range_grid),
        precision))

    # --- stability margins ----------------------------------------------------
    margins: dict = {}
    margin_rows = []
    for device_type in ("1", "2"):
        design = config.cell_design(device_type)
        for mode in ("hold", "read"):
            report = static_noise_margin(design, mode)
            margins[(device_type, mode)] = report.snm_v
            margin_rows.append((mode, device_type, 1e3 * report.snm_v))
            stem = f"butterfly_type{device_type}_{mode}"
            files.append(write_csv(
                out_dir / f"{stem}.csv",
                ["v_in_V", "out_ch_to_cl_V", "out_cl_to_ch_V"],
                zip(report.curves.forced_v, report.curves.response_from_ch,
                    report.curves.response_from_cl),
                precision))
            files.append(figures.save_butterfly(
                report.curves, report.snm_v,
                f"flavor {device_type} {mode}", out_dir / f"{stem}.png"))
        wm = write_margin(design)
        margins[(device_type, "write")] = wm
        margin_rows.append(("write", device_type, 1e3 * wm))
    files.append(write_csv(out_dir / "margins.csv",
                           ["mode", "device_type", "margin_mV"],
                           margin_rows, precision))

    # --- strike matrix ----------------------------------------------------------
    collection = config.collection()
    vdd = config.circuit["vdd"]
    dt = config.circuit["dt"]
    t_stop = config.circuit["t_stop"]
    method = config.circuit["integrator"]
    devices = (config.device_models("1") if config.devices_overridden()
               else None)

    def search(scenario: str, device_type: str):
        bank = (config.device_models(device_type)
                if config.devices_overridden() else None)
        return critical_let(scenario, device_type, collection, vdd,
                            t_stop, dt, method=method, devices=bank)

    def hold(scenario: str):
        return run_strike(scenario, "1", HOLD_REQUIREMENTS[scenario],
                          collection, vdd, t_stop, dt, method, devices)

    searches = [(s, t) for s in SCENARIOS for t in ("1", "2")]
    tasks = [lambda s=s, t=t: search(s, t) for s, t in searches]
    tasks += [lambda s=s: hold(s) for s in SCENARIOS]
    with ThreadPoolExecutor(thread_budget(len(tasks), threads)) as pool:
        futures = [pool.submit(task) for task in tasks]
        outcomes = [f.result() for f in futures]
    crits = {key: res for key, res in zip(searches, outcomes[:len(searches)])}
    holds = {s: res for s, res in zip(SCENARIOS, outcomes[len(searches):])}

    files.append(write_csv(
        out_dir / "critical_let.csv",
        ["scenario", "device_type", "let_crit_multiple", "status"],
        [(s, t, crits[(s, t)].multiple, crits[(s, t)].status)
         for s, t in searches],
        precision))
    for res in holds.values():
        files.extend(_strike_files(res, out_dir, precision))

    # --- grade the threshold relations ----------------------------------------
    def crit_value(scenario, device_type):
        found = crits[(scenario, device_type)]
        return found.multiple, f"{found.multiple:.4g}x"

    rows = []
    m, text = crit_value("channel", "2")
    rows.append(ReportRow("channel flavor-2 critical", text,
                          "<= 1.0x", m <= 1.0))
    rows.append(ReportRow(
        "channel flavor-1 hold at 2.8x",
        "flipped" if holds["channel"].flipped else "held",
        "no flip", not holds["channel"].flipped))

    m, text = crit_value("substrate", "2")
    rows.append(ReportRow("substrate flavor-2 critical", text,
                          "0.35x +/- 10%", abs(m - 0.35) <= 0.035))
    sub_waves = holds["substrate"].waves
    drift = max(float(np.max(np.abs(sub_waves.node(n) - sub_waves.node(n)[0])))
                for n in sub_waves.voltages)
    rows.append(ReportRow(
        "substrate flavor-1 hold at 69x", f"{1e9 * drift:.3g} nV drift",
        "no flip and < 1 uV",
        not holds["substrate"].flipped and drift < 1e-6))

    m, text = crit_value("top", "2")
    rows.append(ReportRow("top flavor-2 critical", text,
                          "0.35x +/- 10%", abs(m - 0.35) <= 0.035))
    rows.append(ReportRow(
        "top flavor-1 hold at 6.9x",
        "flipped" if holds["top"].flipped else "held",
        "no flip", not holds["top"].flipped))

    files.append(write_csv(
        out_dir / "summary.csv",
        ["relation", "measured", "required", "status"],
        [(r.name, r.value, r.requirement, "PASS" if r.passed else "FAIL")
         for r in rows],
        precision))

    return ReportResult(rows=tuple(rows), margins=margins,
                        files=tuple(files),
                        elapsed_s=time.perf_counter() - t0)
