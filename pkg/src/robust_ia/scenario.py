"""JSON scenario files.

A scenario selects a plant, a control law with its gains, the initial
condition, a disturbance schedule, integrator settings and certificate
options.  Every section is optional; omitted values fall back to the
two-link manipulator disturbance-rejection experiment.  Matrices are
row-major nested lists, or ``{"diag": [...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import manipulator
from .closed_loop import ClosedLoopSystem
from .controllers import ControllerState, LegacyIAGains, RobustIAGains
from .errors import GainError, RobustIAError
from .ph import DisturbanceSignal, PhPlant, PlantState, StructureMatrices, quadratic_plant
from .sim import IntegratorConfig


class ScenarioError(RobustIAError, ValueError):
    """Malformed scenario document; ``key`` names the offending entry."""

    category = "parse"

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


DEFAULT_SCHEDULE = [{"t": 4.0, "value": [50.0, 30.0]}]

_TOP_KEYS = {"name", "plant", "law", "initial", "disturbance", "integrator", "certificate"}


@dataclass
class CertificateOptions:
    box: tuple[float, float] = (-10.0, 10.0)
    grid: int = 50
    wdot: bool = True


@dataclass
class Scenario:
    name: str
    plant: PhPlant
    gains: RobustIAGains | LegacyIAGains
    disturbance: DisturbanceSignal
    x0: PlantState
    xc0: ControllerState
    integrator: IntegratorConfig
    certificate: CertificateOptions = field(default_factory=CertificateOptions)
    manipulator_params: manipulator.ManipulatorParams | None = None
    target: np.ndarray | None = None
    friction_bound: str | None = None

    @property
    def system(self) -> ClosedLoopSystem:
        return ClosedLoopSystem(self.plant, self.gains, self.disturbance)

    def damping_samples(self, box=None, grid=None) -> list[StructureMatrices]:
        lo, hi = self.certificate.box if box is None else box
        n = self.certificate.grid if grid is None else grid
        if self.manipulator_params is not None:
            return manipulator.damping_samples(self.plant, self.manipulator_params, lo, hi, n)
        return [self.plant.structure(self.plant.x_star)]


def matrix(value, key: str, size: int | None = None) -> np.ndarray:
    try:
        if isinstance(value, dict):
            _only(value, {"diag"}, key)
            A = np.diag(np.asarray(value["diag"], dtype=float))
        else:
            A = np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(key, f"not a matrix ({exc})") from None
    if A.ndim != 2 or (size is not None and A.shape != (size, size)):
        raise ScenarioError(key, f"expected a {size}x{size} matrix, got shape {A.shape}")
    return A


def vector(value, key: str, size: int | None = None) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(key, "not a numeric vector") from None
    if v.ndim != 1 or (size is not None and v.shape[0] != size):
        raise ScenarioError(key, f"expected a vector of length {size}, got shape {v.shape}")
    return v


def _only(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ScenarioError(where, "expected an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(f"{where}.{extra[0]}" if where else extra[0], "unknown key")


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(key, "expected a number")
    return float(value)


def _manipulator_params(node: dict) -> manipulator.ManipulatorParams:
    _only(node, {"a1", "a2", "b", "alpha", "beta", "K_d", "K_p", "q_d"}, "plant.params")
    kw: dict[str, Any] = {}
    for k in ("a1", "a2", "b"):
        if k in node:
            kw[k] = _number(node[k], f"plant.params.{k}")
    for k in ("alpha", "beta", "q_d"):
        if k in node:
            kw[k] = vector(node[k], f"plant.params.{k}", 2)
    for k in ("K_d", "K_p"):
        if k in node:
            kw[k] = matrix(node[k], f"plant.params.{k}", 2)
    try:
        return manipulator.ManipulatorParams(**kw)
    except ValueError as exc:
        raise GainError(f"plant.params: {exc}") from None


def _plant(node: dict):
    kind = node.get("type", "manipulator-2dof")
    if kind == "manipulator-2dof":
        _only(node, {"type", "params", "friction_sign"}, "plant")
        params = _manipulator_params(node.get("params", {}))
        sign = node.get("friction_sign", "psd")
        if sign not in ("psd", "literal"):
            raise ScenarioError("plant.friction_sign", "must be 'psd' or 'literal'")
        return manipulator.build_plant(params, sign), params
    if kind == "custom-quadratic":
        _only(node, {"type", "m", "Q", "J", "R", "x_star"}, "plant")
        for k in ("m", "Q"):
            if k not in node:
                raise ScenarioError(f"plant.{k}", "required for custom-quadratic")
        if not isinstance(node["m"], int) or isinstance(node["m"], bool):
            raise ScenarioError("plant.m", "expected an integer")
        Q = matrix(node["Q"], "plant.Q")
        n = Q.shape[0]
        J = matrix(node["J"], "plant.J", n) if "J" in node else np.zeros((n, n))
        R = matrix(node["R"], "plant.R", n) if "R" in node else np.zeros((n, n))
        x_star = vector(node["x_star"], "plant.x_star", n) if "x_star" in node else None
        if not 1 <= node["m"] <= n:
            raise ScenarioError("plant.m", f"must lie in [1, {n}]")
        return quadratic_plant(Q, J, R, node["m"], x_star), None
    raise ScenarioError("plant.type", f"unknown plant {kind!r}")


def _gains(node: dict, m: int, params, bound: str):
    kind = node.get("type", "robust")
    _only(node, {"type", "gains", "friction_bound"}, "law")
    gnode = node.get("gains", {})
    I = {"diag": [1.0] * m}
    if kind == "robust":
        _only(gnode, {"K_i", "D_c1", "D_c2", "D_c3"}, "law.gains")
        mats = {k: matrix(gnode.get(k, I), f"law.gains.{k}", m) for k in ("K_i", "D_c1", "D_c2")}
        D_c3 = gnode.get("D_c3", "auto" if params is not None else I)
        if D_c3 == "auto":
            if params is None:
                raise ScenarioError("law.gains.D_c3", "'auto' needs the manipulator plant")
            mats["D_c3"] = 0.5 * (params.K_d + manipulator.friction_bound(params).get(bound))
        else:
            mats["D_c3"] = matrix(D_c3, "law.gains.D_c3", m)
        return RobustIAGains(**mats)
    if kind == "legacy":
        _only(gnode, {"K_i", "J_c1", "R_c1", "R_c2"}, "law.gains")
        Z = np.zeros((m, m)).tolist()
        defaults = {"K_i": I, "J_c1": Z, "R_c1": I, "R_c2": Z}
        return LegacyIAGains(**{k: matrix(gnode.get(k, v), f"law.gains.{k}", m) for k, v in defaults.items()})
    raise ScenarioError("law.type", f"unknown law {kind!r}")


def _schedule(entries, m: int) -> DisturbanceSignal:
    if not isinstance(entries, list):
        raise ScenarioError("disturbance", "expected a list of {t, value} entries")
    sched = []
    for i, e in enumerate(entries):
        _only(e, {"t", "value"}, f"disturbance[{i}]")
        if "t" not in e or "value" not in e:
            raise ScenarioError(f"disturbance[{i}]", "needs 't' and 'value'")
        sched.append((_number(e["t"], f"disturbance[{i}].t"), vector(e["value"], f"disturbance[{i}].value", m)))
    try:
        return DisturbanceSignal.from_schedule(sched, m)
    except ValueError as exc:
        raise ScenarioError("disturbance", str(exc)) from None


def _initial(node: dict, plant: PhPlant, is_manip: bool):
    m, s = plant.dims.m, plant.dims.s
    allowed = {"x_a", "x_u", "x_c"} | ({"p", "q"} if is_manip else set())
    _only(node, allowed, "initial")
    aliases = {"x_a": "p", "x_u": "q"}
    out = {}
    for key, size in (("x_a", m), ("x_u", s), ("x_c", m)):
        alias = aliases.get(key) if is_manip else None
        if key in node and alias and alias in node:
            raise ScenarioError(f"initial.{alias}", f"conflicts with initial.{key}")
        src = key if key in node else alias if alias and alias in node else None
        out[key] = vector(node[src], f"initial.{src}", size) if src else np.zeros(size)
    return PlantState(out["x_a"], out["x_u"]), ControllerState(out["x_c"])


def parse_scenario(doc: dict, name: str = "scenario") -> Scenario:
    _only(doc, _TOP_KEYS, "")
    plant, params = _plant(doc.get("plant", {}))
    m = plant.dims.m
    law = doc.get("law", {})
    bound = law.get("friction_bound", "supremum") if isinstance(law, dict) else "supremum"
    if bound not in ("supremum", "literal"):
        raise ScenarioError("law.friction_bound", "must be 'supremum' or 'literal'")
    gains = _gains(law, m, params, bound)

    default_sched = DEFAULT_SCHEDULE if params is not None else []
    disturbance = _schedule(doc.get("disturbance", default_sched), m)
    x0, xc0 = _initial(doc.get("initial", {}), plant, params is not None)

    inode = doc.get("integrator", {})
    _only(inode, {"step", "t_end"}, "integrator")
    cfg = IntegratorConfig(
        _number(inode.get("step", 1e-3), "integrator.step"),
        _number(inode.get("t_end", 30.0), "integrator.t_end"),
    )

    cnode = doc.get("certificate", {})
    _only(cnode, {"box", "grid", "wdot"}, "certificate")
    box = vector(cnode.get("box", [-10.0, 10.0]), "certificate.box", 2)
    grid = cnode.get("grid", 50)
    if not isinstance(grid, int) or isinstance(grid, bool) or grid < 1:
        raise ScenarioError("certificate.grid", "expected a positive integer")
    cert = CertificateOptions((float(box[0]), float(box[1])), grid, bool(cnode.get("wdot", True)))

    target = plant.x_star.x_u.copy()
    return Scenario(
        name=str(doc.get("name", name)),
        plant=plant,
        gains=gains,
        disturbance=disturbance,
        x0=x0,
        xc0=xc0,
        integrator=cfg,
        certificate=cert,
        manipulator_params=params,
        target=target,
        friction_bound=bound if params is not None else None,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read file ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON ({exc})") from None
    return parse_scenario(doc, name=path.stem)
