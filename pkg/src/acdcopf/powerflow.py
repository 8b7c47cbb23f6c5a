"""Steady-state solvers for the hybrid AC/DC grid.

The coupled problem is solved sequentially: a Newton-Raphson AC solve and
a Newton DC-grid solve alternate, exchanging converter-station power
through the station loss model and the voltage-power droop characteristic
``U_dc - U_dc0 = R * (P_dc0 - P_dc)`` until the coupling residual at every
converter is below tolerance.

Sign conventions
----------------
``P_s``/``Q_s`` is the power flowing from the PCC bus into the converter
branch (positive rectifies, AC to DC).  ``P_dc`` is the power a converter
injects into the DC network.  Station bookkeeping uses the power arriving
at the converter terminal, which at convergence equals ``P_dc + P_loss``.
The pure two-port helper :func:`converter_injections` instead reports the
power entering the coupling branch at *each* end, so that
``P_s + P_c`` equals the series conduction loss exactly.

All functions are pure: identical inputs give bit-identical outputs, and
any number of concurrent solves may share a read-only network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netmodel import Network

TOL_AC = 1e-8
TOL_DC = 1e-8
TOL_COUPLE = 1e-6
MAX_NR = 20
MAX_DC = 20
MAX_OUTER = 50


class PowerFlowConfigError(Exception):
    """The solve is structurally impossible (e.g. no DC voltage control)."""


@dataclass
class AcState:
    vm: np.ndarray             # per-bus voltage magnitude
    va: np.ndarray             # per-bus voltage angle (rad)
    p_branch: np.ndarray       # from-side active flow per branch
    q_branch: np.ndarray
    p_inj: np.ndarray          # solved net active injection per bus
    q_inj: np.ndarray
    iterations: int
    max_mismatch: float
    converged: bool
    singular: bool = False


@dataclass
class DcState:
    u: np.ndarray              # per-DC-bus voltage
    i_inj: np.ndarray          # per-DC-bus injected current
    p_inj: np.ndarray          # per-DC-bus injected power
    branch_i: np.ndarray       # per-branch current (from side)
    branch_p: np.ndarray       # per-branch power flow (from side)
    iterations: int
    converged: bool


@dataclass
class ConverterState:
    name: str
    p_s: float                 # actual PCC-side power into the branch
    q_s: float
    p_c: float                 # power arriving at the converter terminal
    q_c: float
    p_loss: float
    i_c: float
    u_c: float
    delta_c: float
    p_dc: float                # injection into the DC network
    residual: float            # |p_c - p_dc - p_loss|


@dataclass
class SystemState:
    ac: AcState
    dc: DcState | None
    converters: list[ConverterState]
    outer_iterations: int
    converged: bool
    failure_stage: str = ""    # "" | ac | dc | coupling
    gen_p: np.ndarray = field(default=None)
    gen_q: np.ndarray = field(default=None)

    @property
    def coupling_residual(self) -> float:
        if not self.converters:
            return 0.0
        return max(c.residual for c in self.converters)


# ---------------------------------------------------------------------------
# Converter station primitives


def converter_injections(us: float, delta_s: float, uc: float, delta_c: float,
                         g: float, b: float) -> tuple[float, float, float, float]:
    """Two-port power injections of the PCC-converter coupling branch.

    Each pair is the power entering the branch at its own end, so
    ``p_s + p_c == g * (us^2 + uc^2 - 2*us*uc*cos(delta_s - delta_c))``
    holds identically (the series conduction loss).
    """
    th = delta_s - delta_c
    cos_t, sin_t = math.cos(th), math.sin(th)
    p_s = us * us * g - us * uc * (g * cos_t + b * sin_t)
    q_s = -us * us * b - us * uc * (g * sin_t - b * cos_t)
    p_c = uc * uc * g - uc * us * (g * cos_t - b * sin_t)
    q_c = -uc * uc * b + uc * us * (g * sin_t + b * cos_t)
    return p_s, q_s, p_c, q_c


def converter_loss(p_c: float, q_c: float, u_c: float,
                   a: float, b: float, c: float) -> float:
    """Converter station loss ``a + b*I_c + c*I_c^2`` with
    ``I_c = sqrt(p_c^2 + q_c^2) / u_c``."""
    if u_c <= 0:
        raise ValueError(f"converter voltage must be positive, got {u_c}")
    i_c = math.hypot(p_c, q_c) / u_c
    return a + b * i_c + c * i_c * i_c


def capability_check(p_s: float, q_s: float, p_center: float, q_center: float,
                     r_min: float, r_max: float) -> str:
    """Classify an operating point against the PQ capability annulus.

    Boundary points count as ``inside``.
    """
    if not r_min < r_max:
        raise ValueError("capability radii must satisfy r_min < r_max")
    d2 = (p_s - p_center) ** 2 + (q_s - q_center) ** 2
    if d2 > r_max * r_max:
        return "above_max"
    if d2 < r_min * r_min:
        return "below_min"
    return "inside"


def _station_from_pcc(v_pcc: complex, p_s: float, q_s: float,
                      g: float, b: float) -> tuple[complex, complex]:
    """Converter terminal voltage and series current for a given PCC state.

    Closed form: the series current follows from the PCC power, and the
    terminal voltage from the voltage drop over the coupling impedance.
    """
    y = complex(g, b)
    s_s = complex(p_s, q_s)
    i_ser = np.conj(s_s / v_pcc)
    v_c = v_pcc - i_ser / y
    return v_c, i_ser


def _station_quantities(v_pcc: complex, p_s: float, q_s: float,
                        conv) -> dict:
    """Arriving power, loss and DC-side injection of one station."""
    v_c, i_ser = _station_from_pcc(v_pcc, p_s, q_s, conv.g, conv.b)
    s_into = v_c * np.conj(i_ser)          # power arriving at the terminal
    p_c, q_c = s_into.real, s_into.imag
    u_c = abs(v_c)
    i_c = abs(i_ser)
    p_loss = conv.a_loss + conv.b_loss * i_c + conv.c_loss * i_c * i_c
    return {
        "u_c": u_c, "delta_c": math.atan2(v_c.imag, v_c.real),
        "i_c": i_c, "p_c": p_c, "q_c": q_c, "p_loss": p_loss,
        "p_dc": p_c - p_loss,
    }


def _solve_ps_for_pdc(v_pcc: complex, q_s: float, conv, p_dc_target: float,
                      p_s_guess: float) -> float:
    """Invert the station model: PCC power that delivers ``p_dc_target``.

    Scalar Newton on ``h(p_s) = p_s - R_br*K - loss(sqrt(K)) - p_dc_target``
    with ``K = (p_s^2 + q_s^2) / |V_pcc|^2``; smooth and well conditioned
    for realistic loss coefficients.
    """
    u_s2 = abs(v_pcc) ** 2
    y = complex(conv.g, conv.b)
    r_br = (1.0 / y).real
    p_s = p_s_guess
    for _ in range(60):
        k = (p_s * p_s + q_s * q_s) / u_s2
        i_c = math.sqrt(k)
        h = (p_s - r_br * k
             - (conv.a_loss + conv.b_loss * i_c + conv.c_loss * k)
             - p_dc_target)
        if abs(h) < 1e-13:
            break
        dk = 2.0 * p_s / u_s2
        di = 0.0 if i_c < 1e-12 else p_s / (u_s2 * i_c)
        dh = 1.0 - r_br * dk - conv.b_loss * di - conv.c_loss * dk
        if abs(dh) < 1e-12:
            break
        p_s -= h / dh
    return p_s


# ---------------------------------------------------------------------------
# AC Newton-Raphson


def solve_ac(net: Network, p_inj: np.ndarray, q_inj: np.ndarray,
             vm_setpoint: np.ndarray, *,
             vm0: np.ndarray | None = None, va0: np.ndarray | None = None,
             tol: float = TOL_AC, max_iter: int = MAX_NR) -> AcState:
    """Newton-Raphson AC power flow in polar form.

    ``p_inj``/``q_inj`` are the specified net injections per bus (load,
    shunt and converter terms already folded in); the slack entry of
    ``p_inj`` and the PV/slack entries of ``q_inj`` are ignored.
    ``vm_setpoint`` fixes the magnitude at PV and slack buses.
    """
    n = net.n_bus
    ybus = net.ybus
    slack = net.slack_index
    kinds = [b.kind for b in net.buses]
    pv = np.array([i for i, k in enumerate(kinds) if k == "pv"], dtype=int)
    pq = np.array([i for i, k in enumerate(kinds) if k == "pq"], dtype=int)
    pvpq = np.concatenate([pv, pq])

    vm = np.ones(n) if vm0 is None else vm0.astype(float).copy()
    va = np.zeros(n) if va0 is None else va0.astype(float).copy()
    fixed = np.concatenate([[slack], pv]).astype(int)
    vm[fixed] = vm_setpoint[fixed]
    va[slack] = 0.0

    npv, npq = len(pv), len(pq)
    converged = False
    singular = False
    iterations = 0
    max_mismatch = math.inf

    for it in range(max_iter + 1):
        v = vm * np.exp(1j * va)
        s_calc = v * np.conj(ybus @ v)
        dp = p_inj[pvpq] - s_calc.real[pvpq]
        dq = q_inj[pq] - s_calc.imag[pq]
        mis = np.concatenate([dp, dq])
        max_mismatch = float(np.max(np.abs(mis))) if mis.size else 0.0
        iterations = it
        if max_mismatch <= tol:
            converged = True
            break
        if it == max_iter:
            break

        diag_v = np.diag(v)
        diag_i = np.diag(ybus @ v)
        diag_vn = np.diag(v / np.abs(v))
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vn) + np.conj(diag_i) @ diag_vn

        j11 = ds_dva.real[np.ix_(pvpq, pvpq)]
        j12 = ds_dvm.real[np.ix_(pvpq, pq)]
        j21 = ds_dva.imag[np.ix_(pq, pvpq)]
        j22 = ds_dvm.imag[np.ix_(pq, pq)]
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, mis)
        except np.linalg.LinAlgError:
            singular = True
            break
        va[pvpq] += dx[:npv + npq]
        vm[pq] += dx[npv + npq:]
        if not np.all(np.isfinite(vm)) or np.any(vm <= 0):
            break

    v = vm * np.exp(1j * va)
    s_calc = v * np.conj(ybus @ v)
    p_br, q_br = branch_flows(net, vm, va)
    return AcState(vm=vm, va=va, p_branch=p_br, q_branch=q_br,
                   p_inj=s_calc.real, q_inj=s_calc.imag,
                   iterations=iterations, max_mismatch=max_mismatch,
                   converged=converged, singular=singular)


def branch_flows(net: Network, vm: np.ndarray,
                 va: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """From-side complex power flow of every AC branch."""
    v = vm * np.exp(1j * va)
    p = np.empty(len(net.branches))
    q = np.empty(len(net.branches))
    for i, br in enumerate(net.branches):
        f = net.bus_index[br.from_bus]
        t = net.bus_index[br.to_bus]
        ys = complex(br.g, br.b)
        ysh = 1j * br.b_charge / 2.0
        tap = br.tap if br.tap != 0.0 else 1.0
        yff = (ys + ysh) / (tap * tap)
        yft = -ys / tap
        s_f = v[f] * np.conj(yff * v[f] + yft * v[t])
        p[i], q[i] = s_f.real, s_f.imag
    return p, q


# ---------------------------------------------------------------------------
# DC grid Newton solve


@dataclass(frozen=True)
class DcControl:
    """Per-converter DC-side control handed to :func:`solve_dc`."""

    bus: int                   # DC bus id
    mode: str                  # droop | const_p | const_vdc
    droop: float = 0.0
    u0: float = 1.0            # droop reference / const_vdc setpoint
    p0: float = 0.0            # droop reference / const_p fixed injection


def solve_dc(dc_buses, dc_branches, controls: list[DcControl], *,
             u_start: np.ndarray | None = None,
             tol: float = TOL_DC, max_iter: int = MAX_DC) -> DcState:
    """Newton solve of the DC network with droop characteristics.

    Node current balance and the droop law are driven to ``tol``.  At
    least one droop or const_vdc converter must be present, otherwise the
    voltage profile is undetermined and :class:`PowerFlowConfigError` is
    raised.
    """
    n = len(dc_buses)
    index = {b.id: i for i, b in enumerate(dc_buses)}
    by_bus = {index[c.bus]: c for c in controls}
    if not any(c.mode in ("droop", "const_vdc") for c in controls):
        raise PowerFlowConfigError(
            "DC grid has no droop or const_vdc converter; voltage undetermined")

    ydc = np.zeros((n, n))
    for br in dc_branches:
        f, t = index[br.from_bus], index[br.to_bus]
        ydc[f, f] += br.y
        ydc[t, t] += br.y
        ydc[f, t] -= br.y
        ydc[t, f] -= br.y

    u = np.ones(n) if u_start is None else u_start.astype(float).copy()
    fixed = [i for i, c in by_bus.items() if c.mode == "const_vdc"]
    for i in fixed:
        u[i] = by_bus[i].u0
    free = np.array([i for i in range(n) if i not in fixed], dtype=int)

    converged = False
    iterations = 0
    for it in range(max_iter + 1):
        i_inj = ydc @ u
        p_inj = u * i_inj
        f_res = np.empty(len(free))
        for r, i in enumerate(free):
            c = by_bus.get(i)
            if c is None:
                f_res[r] = p_inj[i]                       # passive bus
            elif c.mode == "const_p":
                f_res[r] = p_inj[i] - c.p0
            else:                                          # droop
                f_res[r] = u[i] - c.u0 - c.droop * (c.p0 - p_inj[i])
        iterations = it
        if free.size == 0 or np.max(np.abs(f_res)) <= tol:
            converged = True
            break
        if it == max_iter:
            break

        # dP_i/dU_j = delta_ij * I_i + U_i * Y_ij
        jac_p = np.diag(i_inj) + u[:, None] * ydc
        jac = np.empty((len(free), len(free)))
        for r, i in enumerate(free):
            c = by_bus.get(i)
            if c is None or c.mode == "const_p":
                jac[r, :] = jac_p[i, free]
            else:
                jac[r, :] = c.droop * jac_p[i, free]
                jac[r, r] += 1.0
        try:
            du = np.linalg.solve(jac, f_res)
        except np.linalg.LinAlgError:
            break
        u[free] -= du
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            break

    i_inj = ydc @ u
    p_inj = u * i_inj
    branch_i = np.empty(len(dc_branches))
    branch_p = np.empty(len(dc_branches))
    for j, br in enumerate(dc_branches):
        f, t = index[br.from_bus], index[br.to_bus]
        branch_i[j] = br.y * (u[f] - u[t])
        branch_p[j] = u[f] * branch_i[j]
    return DcState(u=u, i_inj=i_inj, p_inj=p_inj, branch_i=branch_i,
                   branch_p=branch_p, iterations=iterations, converged=converged)


# ---------------------------------------------------------------------------
# Coupled AC/DC solve


def assemble_ac_inputs(net: Network, p_g_ctrl: dict[int, float],
                       u_g_ctrl: dict[int, float], q_c_ctrl: dict[int, float],
                       p_s_act: np.ndarray, q_s_act: np.ndarray):
    """Per-bus specified injections and magnitude setpoints."""
    n = net.n_bus
    p_inj = np.zeros(n)
    q_inj = np.zeros(n)
    vm_set = np.ones(n)
    for bus in net.buses:
        i = net.bus_index[bus.id]
        p_inj[i] -= bus.p_d
        q_inj[i] -= bus.q_d
        vm_set[i] = bus.u
    for gen in net.generators:
        i = net.bus_index[gen.bus]
        p_inj[i] += p_g_ctrl.get(gen.bus, gen.p_g)
        vm_set[i] = u_g_ctrl.get(gen.bus, gen.u_g)
    for sh in net.shunts:
        q_inj[net.bus_index[sh.bus]] += q_c_ctrl.get(sh.bus, sh.q_c)
    for j, conv in enumerate(net.converters):
        i = net.bus_index[conv.pcc_bus]
        p_inj[i] -= p_s_act[j]
        q_inj[i] -= q_s_act[j]
    return p_inj, q_inj, vm_set


def derive_droop_schedule(conv, p_s: float, q_s: float) -> float:
    """Scheduled DC injection implied by the scheduled PCC power.

    Evaluated at nominal voltage: the droop characteristic absorbs the
    (small) mismatch between this estimate and the converged solution.
    """
    y = complex(conv.g, conv.b)
    r_br = (1.0 / y).real
    k = p_s * p_s + q_s * q_s
    i_c = math.sqrt(k)
    return p_s - r_br * k - (conv.a_loss + conv.b_loss * i_c + conv.c_loss * k)


def solve_acdc(net: Network, controls, *,
               tol_ac: float = TOL_AC, tol_dc: float = TOL_DC,
               tol_couple: float = TOL_COUPLE, max_outer: int = MAX_OUTER,
               warm: SystemState | None = None,
               trace: list | None = None) -> SystemState:
    """Alternating AC/DC solve for a decoded control setting.

    ``controls`` is an :class:`acdcopf.opfcore.DecodedControls`-like
    object carrying per-element dictionaries (see that module).  Failure
    of an inner stage is reported through ``converged=False`` plus
    ``failure_stage`` in {"ac", "dc", "coupling"}.
    """
    n_conv = len(net.converters)
    p_s = np.array([controls.p_s.get(c.name, c.p_s) for c in net.converters])
    q_s = np.array([controls.q_s.get(c.name, c.q_s) for c in net.converters])
    u_dc0 = np.array([controls.u_dc0.get(c.name, c.u_dc0)
                      for c in net.converters])
    droop = np.array([controls.droop.get(c.name, c.droop)
                      for c in net.converters])

    p_dc0 = np.array([derive_droop_schedule(c, p_s[j], q_s[j])
                      for j, c in enumerate(net.converters)])

    vm0 = warm.ac.vm if warm is not None else None
    va0 = warm.ac.va if warm is not None else None
    dc_u0 = warm.dc.u if (warm is not None and warm.dc is not None) else None

    ac = None
    dc = None
    p_s_act = p_s.copy()
    station: list[dict] = []
    outer = 0
    failure = ""
    converged = False

    while outer < max_outer:
        outer += 1
        p_inj, q_inj, vm_set = assemble_ac_inputs(
            net, controls.p_g, controls.u_g, controls.q_c, p_s_act, q_s)
        ac = solve_ac(net, p_inj, q_inj, vm_set, vm0=vm0, va0=va0,
                      tol=tol_ac)
        if not ac.converged:
            failure = "ac"
            break
        vm0, va0 = ac.vm, ac.va

        if n_conv == 0:
            converged = True
            break

        v_pcc = [ac.vm[net.bus_index[c.pcc_bus]]
                 * np.exp(1j * ac.va[net.bus_index[c.pcc_bus]])
                 for c in net.converters]
        station = [_station_quantities(v_pcc[j], p_s_act[j], q_s[j], c)
                   for j, c in enumerate(net.converters)]

        dc_controls = []
        for j, c in enumerate(net.converters):
            if c.mode == "const_p":
                dc_controls.append(DcControl(c.dc_bus, "const_p",
                                             p0=station[j]["p_dc"]))
            elif c.mode == "const_vdc":
                dc_controls.append(DcControl(c.dc_bus, "const_vdc",
                                             u0=u_dc0[j]))
            else:
                dc_controls.append(DcControl(c.dc_bus, "droop",
                                             droop=droop[j], u0=u_dc0[j],
                                             p0=p_dc0[j]))
        dc = solve_dc(net.dc_buses, net.dc_branches, dc_controls,
                      u_start=dc_u0, tol=tol_dc)
        if not dc.converged:
            failure = "dc"
            break
        dc_u0 = dc.u

        # coupling residual: AC-side delivery vs DC-side absorption
        residual = max(abs(station[j]["p_dc"]
                           - dc.p_inj[net.dc_bus_index[c.dc_bus]])
                       for j, c in enumerate(net.converters))
        if trace is not None:
            trace.append((outer, ac.iterations, dc.iterations, residual))
        if residual <= tol_couple:
            converged = True
            break

        # back-substitute the DC solution into the AC-side schedules
        for j, c in enumerate(net.converters):
            if c.mode == "const_p":
                continue
            target = dc.p_inj[net.dc_bus_index[c.dc_bus]]
            p_s_act[j] = _solve_ps_for_pdc(v_pcc[j], q_s[j], c, target,
                                           p_s_act[j])
    if not converged and not failure:
        failure = "coupling"

    conv_states: list[ConverterState] = []
    if ac is not None and ac.converged and n_conv and station:
        for j, c in enumerate(net.converters):
            st = station[j]
            if dc is not None and dc.converged and c.mode != "const_p":
                p_dc = dc.p_inj[net.dc_bus_index[c.dc_bus]]
            else:
                p_dc = st["p_dc"]
            conv_states.append(ConverterState(
                name=c.name, p_s=p_s_act[j], q_s=q_s[j],
                p_c=st["p_c"], q_c=st["q_c"], p_loss=st["p_loss"],
                i_c=st["i_c"], u_c=st["u_c"], delta_c=st["delta_c"],
                p_dc=p_dc, residual=abs(st["p_c"] - p_dc - st["p_loss"])))

    state = SystemState(ac=ac, dc=dc, converters=conv_states,
                        outer_iterations=outer, converged=converged,
                        failure_stage=failure)
    if converged:
        _fill_generator_outputs(net, state, controls)
    return state


def _fill_generator_outputs(net: Network, state: SystemState,
                            controls) -> None:
    """Recover generator P/Q from solved bus injections."""
    ac = state.ac
    n_gen = len(net.generators)
    gen_p = np.zeros(n_gen)
    gen_q = np.zeros(n_gen)
    slack_bus = net.buses[net.slack_index].id
    p_s_by_bus: dict[int, float] = {}
    q_s_by_bus: dict[int, float] = {}
    for cs, conv in zip(state.converters, net.converters):
        p_s_by_bus[conv.pcc_bus] = p_s_by_bus.get(conv.pcc_bus, 0.0) + cs.p_s
        q_s_by_bus[conv.pcc_bus] = q_s_by_bus.get(conv.pcc_bus, 0.0) + cs.q_s
    q_c_by_bus = {sh.bus: controls.q_c.get(sh.bus, sh.q_c) for sh in net.shunts}
    for gi, gen in enumerate(net.generators):
        i = net.bus_index[gen.bus]
        bus = net.buses[i]
        if gen.bus == slack_bus:
            gen_p[gi] = (ac.p_inj[i] + bus.p_d + p_s_by_bus.get(gen.bus, 0.0))
        else:
            gen_p[gi] = controls.p_g.get(gen.bus, gen.p_g)
        gen_q[gi] = (ac.q_inj[i] + bus.q_d + q_s_by_bus.get(gen.bus, 0.0)
                     - q_c_by_bus.get(gen.bus, 0.0))
    state.gen_p = gen_p
    state.gen_q = gen_q
