"""Small nodal circuit engine for transistor cells.

Unknowns are the voltages of internal nodes (everything that is neither
ground nor pinned by an ideal voltage source). The KCL residual at a node
is the sum of currents leaving it; equilibria come from a damped Newton
iteration with analytic Jacobians, and transients from backward-Euler or
trapezoidal integration with the same nonlinear solve per step.

The engine deliberately stays scalar pure Python: the cells it targets
have a handful of unknowns, and per-step overhead dominates any vector
math. All iteration orders are fixed by sorted node names, so repeated
runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .devices import DeviceModel, terminal_current
from .errors import SolverError, ValidationError

#: Node name treated as the 0 V reference.
GROUND = "gnd"

#: Newton acceptance threshold on the worst KCL residual, amps.
RESIDUAL_TOL_A = 1e-12

#: Per-node cap on a single Newton update, volts.
MAX_NEWTON_STEP_V = 0.3

MAX_NEWTON_ITERS = 200
SOURCE_STEPS = 10


@dataclass(frozen=True)
class Transistor:
    name: str
    drain: str
    gate: str
    source: str
    model: DeviceModel


@dataclass(frozen=True)
class VoltageSource:
    """Ideal source pinning one node to a fixed potential against ground."""

    name: str
    node: str
    voltage_v: float


@dataclass(frozen=True)
class Capacitor:
    """Linear capacitor from a node to ground."""

    name: str
    node: str
    cap_f: float

    def __post_init__(self) -> None:
        if self.cap_f <= 0.0:
            raise ValidationError(f"capacitor {self.name}: cap_f must be positive")


@dataclass(frozen=True)
class GaussianPulse:
    """Current pulse carrying a fixed total charge.

    The waveform is q_total / (sigma * sqrt(2 pi)) * exp(-(t - t_peak)^2 /
    (2 sigma^2)), so its time integral is the total charge regardless of
    the width.
    """

    q_total_pc: float
    t_peak_s: float = 50e-12
    sigma_s: float = 2e-12

    def __post_init__(self) -> None:
        if self.sigma_s <= 0.0:
            raise ValidationError("pulse sigma_s must be positive")
        if self.q_total_pc < 0.0:
            raise ValidationError("pulse charge must be non-negative")

    def current_a(self, t_s: float) -> float:
        q_c = self.q_total_pc * 1e-12
        arg = (t_s - self.t_peak_s) / self.sigma_s
        return q_c / (self.sigma_s * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * arg * arg)


@dataclass(frozen=True)
class CurrentStimulus:
    """Pulse injected between two nodes; positive current flows from -> to."""

    name: str
    from_node: str
    to_node: str
    pulse: GaussianPulse


class Circuit:
    """Compiled netlist: transistors, ideal sources, node caps, stimuli."""

    def __init__(self, transistors=(), sources=(), capacitors=(), stimuli=()):
        self.transistors: tuple[Transistor, ...] = tuple(transistors)
        self.sources: tuple[VoltageSource, ...] = tuple(sources)
        self.capacitors: tuple[Capacitor, ...] = tuple(capacitors)
        self.stimuli: tuple[CurrentStimulus, ...] = tuple(stimuli)
        self._validate()
        self._compile()

    def _validate(self) -> None:
        names = [e.name for e in (*self.transistors, *self.sources,
                                  *self.capacitors, *self.stimuli)]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValidationError(f"duplicate element names: {sorted(dupes)}")
        pinned = {}
        for s in self.sources:
            if s.node == GROUND:
                raise ValidationError(f"source {s.name} drives the ground node")
            if s.node in pinned:
                raise ValidationError(f"node {s.node} pinned by two sources")
            pinned[s.node] = s.voltage_v
        cap_nodes = {c.node for c in self.capacitors}
        for c in self.capacitors:
            if c.node == GROUND or c.node in pinned:
                raise ValidationError(
                    f"capacitor {c.name} sits on a fixed node; it would never act"
                )
        missing = sorted(self._internal_nodes() - cap_nodes)
        if missing:
            raise ValidationError(
                "internal nodes need a capacitance to ground for transients: "
                + ", ".join(missing)
            )

    def _internal_nodes(self) -> set[str]:
        pinned = {s.node for s in self.sources}
        nodes: set[str] = set()
        for t in self.transistors:
            nodes.update((t.drain, t.gate, t.source))
        for st in self.stimuli:
            nodes.update((st.from_node, st.to_node))
        nodes.update(c.node for c in self.capacitors)
        return {n for n in nodes if n != GROUND and n not in pinned}

    def _compile(self) -> None:
        self.unknowns: list[str] = sorted(self._internal_nodes())
        self._index = {n: i for i, n in enumerate(self.unknowns)}
        self._pinned = {s.node: s.voltage_v for s in self.sources}
        # Per-transistor terminal references: unknown index, or -1 with a
        # fixed potential.
        self._t_refs = []
        for t in self.transistors:
            self._t_refs.append(tuple(self._node_ref(n)
                                      for n in (t.drain, t.gate, t.source)))
        self._cap_refs = [(self._index[c.node], c.cap_f) for c in self.capacitors]
        self._stim_refs = [(self._index.get(st.from_node, -1),
                            self._index.get(st.to_node, -1), st.pulse)
                           for st in self.stimuli
                           if st.from_node in self._index or st.to_node in self._index]

    def _node_ref(self, name: str) -> tuple[int, float]:
        if name in self._index:
            return self._index[name], 0.0
        if name == GROUND:
            return -1, 0.0
        if name in self._pinned:
            return -1, self._pinned[name]
        raise ValidationError(f"node {name} is floating (no cap, source or ground)")

    # -- residual evaluation ------------------------------------------------

    def static_residual(self, volts: list[float], source_scale: float = 1.0):
        """KCL residual (A) and Jacobian (A/V) of the transistor network.

        volts lists unknown-node voltages in self.unknowns order. Returns
        (residual, jacobian) as plain nested lists.
        """
        n = len(volts)
        res = [0.0] * n
        jac = [[0.0] * n for _ in range(n)]
        for t, refs in zip(self.transistors, self._t_refs):
            (di, dv), (gi, gv), (si, sv) = refs
            vd = volts[di] if di >= 0 else dv * source_scale
            vg = volts[gi] if gi >= 0 else gv * source_scale
            vs = volts[si] if si >= 0 else sv * source_scale
            i, ddd, ddg, dds = terminal_current(t.model, vd, vg, vs)
            if di >= 0:
                res[di] += i
                row = jac[di]
                row[di] += ddd
                if gi >= 0:
                    row[gi] += ddg
                if si >= 0:
                    row[si] += dds
            if si >= 0:
                res[si] -= i
                row = jac[si]
                if di >= 0:
                    row[di] -= ddd
                if gi >= 0:
                    row[gi] -= ddg
                if si >= 0:
                    row[si] -= dds
        return res, jac

    def stimulus_currents(self, t_s: float) -> list[float]:
        """Per-unknown stimulus outflow at time t_s, amps."""
        out = [0.0] * len(self.unknowns)
        for fi, ti, pulse in self._stim_refs:
            i = pulse.current_a(t_s)
            if fi >= 0:
                out[fi] += i
            if ti >= 0:
                out[ti] -= i
        return out

    def voltages_dict(self, volts: list[float]) -> dict[str, float]:
        out = {n: volts[i] for n, i in self._index.items()}
        out.update(self._pinned)
        return out


def _lin_solve(a: list[list[float]], b: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting for tiny dense systems."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-300:
            raise SolverError("singular Jacobian in linear solve")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
        inv = 1.0 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f != 0.0:
                for c in range(col, n + 1):
                    m[r][c] -= f * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / m[r][r]
    return x


def newton_solve(residual_fn, v0: list[float], max_iter: int = MAX_NEWTON_ITERS,
            tol_a: float = RESIDUAL_TOL_A):
    """Damped Newton with per-node step clipping and residual line search."""
    v = v0[:]
    res, jac = residual_fn(v)
    worst = max((abs(r) for r in res), default=0.0)
    for _ in range(max_iter):
        if worst <= tol_a:
            return v, worst
        step = _lin_solve(jac, [-r for r in res])
        clip = max((abs(s) for s in step), default=0.0)
        if clip > MAX_NEWTON_STEP_V:
            f = MAX_NEWTON_STEP_V / clip
            step = [s * f for s in step]
        scale = 1.0
        for _ in range(30):
            trial = [vi + scale * si for vi, si in zip(v, step)]
            t_res, t_jac = residual_fn(trial)
            t_worst = max((abs(r) for r in t_res), default=0.0)
            if t_worst < worst or t_worst <= tol_a:
                v, res, jac, worst = trial, t_res, t_jac, t_worst
                break
            scale *= 0.5
        else:
            break
    if worst <= tol_a:
        return v, worst
    raise SolverError("Newton iteration stalled",
                      residual=worst, iterations=max_iter)


def dc_solve(circuit: Circuit, initial: dict[str, float] | None = None,
             max_iter: int = MAX_NEWTON_ITERS,
             tol_a: float = RESIDUAL_TOL_A) -> dict[str, float]:
    """Equilibrium node voltages.

    initial seeds any subset of unknown nodes (others start at 0 V). If the
    direct solve stalls, sources are ramped up in stages with warm starts.
    """
    seed = initial or {}
    unknown = set(seed) - set(circuit.unknowns)
    if unknown:
        raise ValidationError(f"initial guess names non-internal nodes: {sorted(unknown)}")
    v0 = [seed.get(n, 0.0) for n in circuit.unknowns]

    def at_scale(scale):
        def fn(v):
            return circuit.static_residual(v, source_scale=scale)
        return fn

    try:
        v, _ = newton_solve(at_scale(1.0), v0, max_iter, tol_a)
    except SolverError:
        v = v0[:]
        for k in range(1, SOURCE_STEPS + 1):
            v, _ = newton_solve(at_scale(k / SOURCE_STEPS), v, max_iter, tol_a)
    return circuit.voltages_dict(v)


@dataclass
class Waveforms:
    """Transient result: sample times and per-node voltage traces."""

    times_s: np.ndarray
    voltages: dict[str, np.ndarray] = field(default_factory=dict)

    def node(self, name: str) -> np.ndarray:
        return self.voltages[name]

    def final(self) -> dict[str, float]:
        return {n: float(v[-1]) for n, v in self.voltages.items()}


def transient(circuit: Circuit, t_stop_s: float, dt_s: float,
              initial: dict[str, float], method: str = "be") -> Waveforms:
    """Fixed-step transient from an explicit initial state.

    method "be" is backward Euler; "trap" is the trapezoidal rule. Steps
    whose state already satisfies KCL at the new time are skipped without
    touching the voltages, so an undisturbed equilibrium stays bit-exact
    for the whole run.
    """
    if method not in ("be", "trap"):
        raise ValidationError(f"unknown integration method {method!r}")
    if dt_s <= 0.0 or t_stop_s <= dt_s:
        raise ValidationError("need dt_s > 0 and t_stop_s > dt_s")
    missing = [n for n in circuit.unknowns if n not in initial]
    if missing:
        raise ValidationError(f"initial state missing nodes: {missing}")

    n_steps = int(round(t_stop_s / dt_s))
    v = [initial[n] for n in circuit.unknowns]
    cap_diag = [0.0] * len(v)
    for idx, c_f in circuit._cap_refs:
        cap_diag[idx] += c_f

    trace = [v[:]]
    times = [0.0]
    res_prev = None
    if method == "trap":
        res_prev, _ = circuit.static_residual(v)
        stim_prev = circuit.stimulus_currents(0.0)

    for k in range(1, n_steps + 1):
        t_new = k * dt_s
        stim_new = circuit.stimulus_currents(t_new)
        v_prev = v

        if method == "be":
            def residual_fn(vt):
                res, jac = circuit.static_residual(vt)
                for i, c_f in enumerate(cap_diag):
                    res[i] += c_f * (vt[i] - v_prev[i]) / dt_s + stim_new[i]
                    jac[i][i] += c_f / dt_s
                return res, jac
        else:
            def residual_fn(vt):
                res, jac = circuit.static_residual(vt)
                for i, c_f in enumerate(cap_diag):
                    res[i] = (c_f * (vt[i] - v_prev[i]) / dt_s
                              + 0.5 * (res[i] + res_prev[i])
                              + 0.5 * (stim_new[i] + stim_prev[i]))
                    for j in range(len(vt)):
                        jac[i][j] *= 0.5
                    jac[i][i] += c_f / dt_s
                return res, jac

        hold_res, _ = residual_fn(v_prev)
        if max((abs(r) for r in hold_res), default=0.0) <= RESIDUAL_TOL_A:
            pass    # already balanced: keep the state bit-exact
        else:
            try:
                v, _ = newton_solve(residual_fn, v_prev)
            except SolverError as exc:
                raise SolverError(
                    f"transient step {k} at t={t_new:.3e}s failed to converge",
                    residual=exc.residual, iterations=exc.iterations,
                ) from exc

        if method == "trap":
            res_prev, _ = circuit.static_residual(v)
            stim_prev = stim_new
        trace.append(v[:])
        times.append(t_new)

    arr = np.asarray(trace)
    voltages = {n: arr[:, i].copy() for n, i in circuit._index.items()}
    for node, volt in circuit._pinned.items():
        voltages[node] = np.full(len(times), volt)
    return Waveforms(times_s=np.asarray(times), voltages=voltages)
