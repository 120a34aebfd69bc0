"""Solver-agnostic MILP of the lagoon dispatch problem.

Per step the model carries the basin level, head, linear fill flows, the
fill binary and, per turbine, a generate binary plus one indicator per
hill-chart segment. Products of a binary with a bounded flow or power are
replaced by auxiliary variables with four big-M rows each.

Nothing here solves the model; ``export_lp`` writes CPLEX-LP text for any
external MILP solver and ``check_schedule`` evaluates a schedule against
every row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from lagoonopt.core import (
    LagoonConfig,
    Objective,
    PriceSeries,
    Schedule,
    TideSeries,
    check_pairing,
    objective_weights,
    validate_config,
)
from lagoonopt.physics import PiecewiseLinear, gen_flow_curve, power_curve

CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=", ">=" or "="
    rhs: float
    tag: str = ""

    def activity(self, values: dict[str, float]) -> float:
        return math.fsum(c * values[v] for v, c in self.coeffs)

    def residual(self, values: dict[str, float]) -> float:
        """Amount by which the row is violated (0 when satisfied)."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[str, float], ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n_steps(self) -> int:
        return self.metadata.get("n_steps", 0)

    @property
    def n_turbines(self) -> int:
        return self.metadata.get("n_turbines", 0)

    def binaries(self) -> list[str]:
        return [v.name for v in self.variables if v.kind == BINARY]

    def variable(self, name: str) -> Variable:
        return self.variables[self.metadata["position"][name]]

    def objective_value(self, values: dict[str, float]) -> float:
        return float(sum(c * values[v] for v, c in self.objective))


def curve_sup(curve: PiecewiseLinear) -> float:
    """Supremum of a piecewise-affine curve, including left limits at breakpoints."""
    return max(max(a + b * lo, a + b * hi)
               for (a, b), lo, hi in zip(curve.segments, curve.breakpoints, curve.breakpoints[1:]))


def flow_upper_bound(curve: PiecewiseLinear) -> float:
    """Curve supremum rounded up to the next 10 units."""
    return math.ceil(curve_sup(curve) / 10.0) * 10.0


def _segment_big_m(a: float, b: float, h_lo: float, h_hi: float, ub: float) -> tuple[float, float]:
    """Smallest M+ and M- making ``y - (a + b H)`` rows redundant when the segment is off.

    ``y`` ranges over [0, ub] and H over [h_lo, h_hi].
    """
    f_min = min(a + b * h_lo, a + b * h_hi)
    f_max = max(a + b * h_lo, a + b * h_hi)
    return max(0.0, ub - f_min), max(0.0, f_max)


class _Builder:
    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.index: dict[str, tuple] = {}

    def var(self, name: str, key: tuple, lb: float = -math.inf, ub: float = math.inf,
            kind: str = CONTINUOUS) -> str:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self.index[name] = key
        return name

    def row(self, name: str, terms: Iterable[tuple[str, float]], sense: str, rhs: float, tag: str):
        merged: dict[str, float] = {}
        for v, c in terms:
            if v not in self.index:
                raise KeyError(f"row {name} references undeclared variable {v}")
            merged[v] = merged.get(v, 0.0) + float(c)
        coeffs = tuple((v, c) for v, c in merged.items() if c != 0.0)
        self.constraints.append(Constraint(name, coeffs, sense, float(rhs), tag))


def build_milp(config: LagoonConfig, tide: TideSeries, prices: PriceSeries | None = None,
               objective: Objective = Objective.MAX_ENERGY) -> MilpModel:
    validate_config(config)
    check_pairing(config, tide, prices)
    objective = Objective(objective)
    weights = objective_weights(objective, prices, tide.n_steps)
    T, n = tide.n_steps, config.n_turbines
    zout = [float(z) for z in tide.levels_m]
    h_lo, h_hi = config.h_bounds_m
    head_m = h_hi - h_lo
    flow_curve = gen_flow_curve(config.h_min_m)
    pow_curve = power_curve(config.h_min_m)
    q_bar = flow_upper_bound(flow_curve)
    p_bar = curve_sup(pow_curve)
    # the lowest segment also covers negative heads, where turbines are idle
    seg_lo = (h_lo,) + flow_curve.breakpoints[1:-1]
    seg_hi = flow_curve.breakpoints[1:-1] + (h_hi,)
    n_seg = len(flow_curve.segments)

    ks = config.k_sluice * config.sluice_area_m2
    kt = config.k_turbine * config.turbine_flow_area_m2
    c_fill = config.n_sluices * ks + n * kt
    fill_lo, fill_hi = c_fill * h_lo, c_fill * h_hi
    dt_over_area = config.dt_s / config.surface_area_m2

    b = _Builder()
    for t in range(T + 1):
        b.var(f"zin_{t}", ("zin", t, None, None))
    for t in range(T + 1):
        b.var(f"H_{t}", ("H", t, None, None), h_lo, h_hi)
    for t in range(T):
        b.var(f"dF_{t}", ("dF", t, None, None), kind=BINARY)
        b.var(f"QS_{t}", ("QS", t, None, None), ks * h_lo, ks * h_hi)
        b.var(f"QTF_{t}", ("QTF", t, None, None), kt * h_lo, kt * h_hi)
        b.var(f"QF_{t}", ("QF", t, None, None), fill_lo, fill_hi)
        b.var(f"zF_{t}", ("zF", t, None, None), fill_lo, fill_hi)
        b.var(f"Q_{t}", ("Q", t, None, None))
        b.var(f"P_{t}", ("P", t, None, None), 0.0, n * p_bar)
        b.var(f"E_{t}", ("E", t, None, None), 0.0, n * p_bar * config.dt_h)
        for i in range(1, n + 1):
            b.var(f"dG_{i}_{t}", ("dG", t, i, None), kind=BINARY)
            for k in range(n_seg):
                b.var(f"seg_{k}_{i}_{t}", ("seg", t, i, k), kind=BINARY)
            b.var(f"QG_{i}_{t}", ("QG", t, i, None), 0.0, q_bar)
            b.var(f"PT_{i}_{t}", ("PT", t, i, None), 0.0, p_bar)
            b.var(f"zTG_{i}_{t}", ("zTG", t, i, None), 0.0, q_bar)
            b.var(f"zP_{i}_{t}", ("zP", t, i, None), 0.0, p_bar)

    b.row("init", [("zin_0", 1.0)], "=", zout[0], "initial-level")
    for t in range(T + 1):
        b.row(f"head_{t}", [(f"H_{t}", 1.0), (f"zin_{t}", -1.0)], "=", -zout[t], "head")
    for t in range(T):
        dF, QF, zF = f"dF_{t}", f"QF_{t}", f"zF_{t}"
        b.row(f"massbal_{t}", [(f"zin_{t + 1}", 1.0), (f"zin_{t}", -1.0), (f"Q_{t}", dt_over_area)],
              "=", 0.0, "mass-balance")
        b.row(f"sluice_{t}", [(f"QS_{t}", 1.0), (f"H_{t}", -ks)], "=", 0.0, "sluice-flow")
        b.row(f"tfill_{t}", [(f"QTF_{t}", 1.0), (f"H_{t}", -kt)], "=", 0.0, "turbine-fill-flow")
        b.row(f"fillsum_{t}", [(QF, 1.0), (f"QS_{t}", -config.n_sluices), (f"QTF_{t}", -n)],
              "=", 0.0, "fill-flow")
        # zF = dF * QF with QF in [fill_lo, fill_hi]
        b.row(f"fillz_ub_{t}", [(zF, 1.0), (dF, -fill_hi)], "<=", 0.0, "fill-product")
        b.row(f"fillz_lb_{t}", [(zF, 1.0), (dF, -fill_lo)], ">=", 0.0, "fill-product")
        b.row(f"fillz_qub_{t}", [(zF, 1.0), (QF, -1.0), (dF, -fill_lo)], "<=", -fill_lo, "fill-product")
        b.row(f"fillz_qlb_{t}", [(zF, 1.0), (QF, -1.0), (dF, -fill_hi)], ">=", -fill_hi, "fill-product")
        b.row(f"flow_{t}", [(f"Q_{t}", 1.0), (zF, -1.0)] + [(f"zTG_{i}_{t}", -1.0) for i in range(1, n + 1)],
              "=", 0.0, "total-flow")
        b.row(f"power_{t}", [(f"P_{t}", 1.0)] + [(f"zP_{i}_{t}", -1.0) for i in range(1, n + 1)],
              "=", 0.0, "plant-power")
        b.row(f"energy_{t}", [(f"E_{t}", 1.0), (f"P_{t}", -config.dt_h)], "=", 0.0, "energy")
        for i in range(1, n + 1):
            dG, QG, PT = f"dG_{i}_{t}", f"QG_{i}_{t}", f"PT_{i}_{t}"
            zTG, zP = f"zTG_{i}_{t}", f"zP_{i}_{t}"
            segs = [f"seg_{k}_{i}_{t}" for k in range(n_seg)]
            b.row(f"segsum_{i}_{t}", [(s, 1.0) for s in segs], "=", 1.0, "segment")
            for k, s in enumerate(segs):
                b.row(f"seglo_{k}_{i}_{t}", [(f"H_{t}", 1.0), (s, -head_m)], ">=",
                      seg_lo[k] - head_m, "segment")
                b.row(f"seghi_{k}_{i}_{t}", [(f"H_{t}", 1.0), (s, head_m)], "<=",
                      seg_hi[k] + head_m, "segment")
                for label, y, curve, ub, tag in (("qgen", QG, flow_curve, q_bar, "hill-flow"),
                                                 ("pgen", PT, pow_curve, p_bar, "hill-power")):
                    a_k, b_k = curve.segments[k]
                    m_up, m_dn = _segment_big_m(a_k, b_k, h_lo, h_hi, ub)
                    # y - (a + b H) <= M+ (1 - seg) and >= -M- (1 - seg)
                    b.row(f"{label}_ub_{k}_{i}_{t}", [(y, 1.0), (f"H_{t}", -b_k), (s, m_up)], "<=",
                          a_k + m_up, tag)
                    b.row(f"{label}_lb_{k}_{i}_{t}", [(y, 1.0), (f"H_{t}", -b_k), (s, -m_dn)], ">=",
                          a_k - m_dn, tag)
            b.row(f"zgen_on_{i}_{t}", [(zTG, 1.0), (dG, -q_bar)], "<=", 0.0, "gen-product")
            b.row(f"zgen_cap_{i}_{t}", [(zTG, 1.0), (QG, -1.0)], "<=", 0.0, "gen-product")
            b.row(f"zgen_floor_{i}_{t}", [(zTG, 1.0), (QG, -1.0), (dG, -q_bar)], ">=", -q_bar,
                  "gen-product")
            b.row(f"zgen_nonneg_{i}_{t}", [(zTG, 1.0)], ">=", 0.0, "gen-product")
            b.row(f"zpow_on_{i}_{t}", [(zP, 1.0), (dG, -p_bar)], "<=", 0.0, "power-product")
            b.row(f"zpow_cap_{i}_{t}", [(zP, 1.0), (PT, -1.0)], "<=", 0.0, "power-product")
            b.row(f"zpow_floor_{i}_{t}", [(zP, 1.0), (PT, -1.0), (dG, -p_bar)], ">=", -p_bar,
                  "power-product")
            b.row(f"zpow_nonneg_{i}_{t}", [(zP, 1.0)], ">=", 0.0, "power-product")
            b.row(f"excl_{i}_{t}", [(dF, 1.0), (dG, 1.0)], "<=", 1.0, "exclusive")

    obj = tuple((f"E_{t}", float(weights[t])) for t in range(T))
    metadata = {
        "n_steps": T,
        "n_turbines": n,
        "objective": objective.value,
        "index": dict(b.index),
        "position": {v.name: j for j, v in enumerate(b.variables)},
        "flow_bound": q_bar,
        "power_bound": p_bar,
        "head_big_m": head_m,
        "z_out": tuple(zout),
        "config": config,
    }
    return MilpModel(tuple(b.variables), tuple(b.constraints), obj, metadata)


def _num(value: float) -> str:
    text = f"{value:.9g}"
    return "0" if text == "-0" else text


def _expr(terms: Iterable[tuple[str, float]], per_line: int = 6) -> str:
    parts = []
    for j, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1.0 else f"{_num(mag)} {name}"
        if j == 0:
            parts.append(f"- {body}" if sign == "-" else body)
        else:
            parts.append(f"{sign} {body}")
    lines = [" ".join(parts[i:i + per_line]) for i in range(0, len(parts), per_line)]
    return "\n   ".join(lines) if lines else "0"


def export_lp(model: MilpModel) -> str:
    """CPLEX-LP text of the model; byte-stable for a given model."""
    if model.n_steps <= 0:
        raise ValueError("empty horizon")
    out = [
        f"\\ tidal lagoon dispatch: {model.n_steps} steps, {model.n_turbines} turbines, "
        f"objective {model.metadata.get('objective', '?')}",
        "Maximize",
        f" obj: {_expr(model.objective)}",
        "Subject To",
    ]
    for row in model.constraints:
        sense = {"<=": "<=", ">=": ">=", "=": "="}[row.sense]
        out.append(f" {row.name}: {_expr(row.coeffs)} {sense} {_num(row.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {v.name} free")
        elif v.ub == math.inf:
            out.append(f" {v.name} >= {_num(v.lb)}")
        elif v.lb == -math.inf:
            out.append(f" -inf <= {v.name} <= {_num(v.ub)}")
        else:
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    out.append("Binary")
    out.extend(f" {name}" for name in model.binaries())
    out.append("End")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Violation:
    row: str
    tag: str
    residual: float

    def __str__(self) -> str:
        return f"{self.row} [{self.tag}] violated by {self.residual:.6g}"


def schedule_assignment(model: MilpModel, schedule: Schedule) -> dict[str, float]:
    """Map a schedule onto a full variable assignment.

    Generating turbines are the first ``n_active``; hill-chart indicators and
    the idle turbines' curve values follow the head.
    """
    T, n = model.n_steps, model.n_turbines
    if schedule.n_steps != T:
        raise ValueError(f"schedule has {schedule.n_steps} steps, model has {T}")
    config: LagoonConfig = model.metadata["config"]
    zout = model.metadata["z_out"]
    flow_curve = gen_flow_curve(config.h_min_m)
    pow_curve = power_curve(config.h_min_m)
    ks = config.k_sluice * config.sluice_area_m2
    kt = config.k_turbine * config.turbine_flow_area_m2
    values: dict[str, float] = {}
    for t in range(T + 1):
        values[f"zin_{t}"] = float(schedule.z_in_m[t])
    for t in range(T):
        values[f"H_{t}"] = float(schedule.head_m[t])
    values[f"H_{T}"] = float(schedule.z_in_m[T]) - zout[T]
    for t, mode in enumerate(schedule.modes):
        if mode.is_generate and mode.n_active > n:
            raise ValueError(f"step {t} uses {mode.n_active} turbines, model has {n}")
        h = values[f"H_{t}"]
        values[f"dF_{t}"] = 1.0 if mode.is_fill else 0.0
        values[f"QS_{t}"] = ks * h
        values[f"QTF_{t}"] = kt * h
        values[f"QF_{t}"] = config.n_sluices * values[f"QS_{t}"] + n * values[f"QTF_{t}"]
        values[f"zF_{t}"] = float(schedule.q_sluice_m3s[t] + schedule.q_turbine_fill_m3s[t])
        values[f"Q_{t}"] = float(schedule.q_total_m3s[t])
        values[f"P_{t}"] = float(schedule.power_mw[t])
        values[f"E_{t}"] = float(schedule.energy_mwh[t])
        h_curve = min(max(h, 0.0), flow_curve.domain[1])
        seg = 0 if h < config.h_min_m else flow_curve.segment_index(h_curve)
        idle_q = flow_curve(h_curve) if seg else 0.0
        idle_p = pow_curve(h_curve) if seg else 0.0
        active = mode.n_active
        for i in range(1, n + 1):
            on = i <= active
            values[f"dG_{i}_{t}"] = 1.0 if on else 0.0
            for k in range(len(flow_curve.segments)):
                values[f"seg_{k}_{i}_{t}"] = 1.0 if k == seg else 0.0
            q = float(schedule.q_turbine_gen_m3s[t]) / active if on else idle_q
            p = float(schedule.power_mw[t]) / active if on else idle_p
            values[f"QG_{i}_{t}"] = q
            values[f"PT_{i}_{t}"] = p
            values[f"zTG_{i}_{t}"] = q if on else 0.0
            values[f"zP_{i}_{t}"] = p if on else 0.0
    return values


def check_assignment(model: MilpModel, values: dict[str, float], tol: float = 1e-6) -> list[Violation]:
    report = []
    for v in model.variables:
        x = values[v.name]
        if x < v.lb - tol or x > v.ub + tol:
            report.append(Violation(f"bound:{v.name}", "bounds", max(v.lb - x, x - v.ub)))
        if v.kind == BINARY and min(abs(x), abs(x - 1.0)) > tol:
            report.append(Violation(f"integrality:{v.name}", "binary", min(abs(x), abs(x - 1.0))))
    for row in model.constraints:
        r = row.residual(values)
        if r > tol:
            report.append(Violation(row.name, row.tag, r))
    return report


def check_schedule(model: MilpModel, schedule: Schedule, tol: float = 1e-6) -> list[Violation]:
    """Every bound, integrality and row violated by ``schedule``; empty when feasible."""
    return check_assignment(model, schedule_assignment(model, schedule), tol)


def violated_steps(report: Iterable[Violation]) -> list[int]:
    steps = set()
    for v in report:
        tail = v.row.rsplit("_", 1)[-1]
        if tail.isdigit():
            steps.add(int(tail))
    return sorted(steps)


def coefficient_matrix(model: MilpModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (A, row_lb, row_ub) view, handy for handing the model to a solver."""
    pos = model.metadata["position"]
    A = np.zeros((len(model.constraints), len(model.variables)))
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for r, row in enumerate(model.constraints):
        for name, c in row.coeffs:
            A[r, pos[name]] = c
        if row.sense in ("<=", "="):
            hi[r] = row.rhs
        if row.sense in (">=", "="):
            lo[r] = row.rhs
    return A, lo, hi
