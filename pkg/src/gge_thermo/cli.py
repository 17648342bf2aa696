"""Command-line front end.

Every subcommand reads numerical parameters from flags, optionally from a
JSON config file (``--config``); flags override the file, which overrides
built-in defaults.  Exit codes: 0 success, 1 invalid input or infeasible
problem, 2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .core import (
    ChargeSet,
    DensityMatrix,
    HermitianOperator,
    expectation,
    gge_state,
    operator_from_json,
    operator_to_json,
    spin_operators,
)
from .errors import (
    DegenerateChargesError,
    GGEThermoError,
    InfeasibleTargetsError,
    MaxIterationsError,
)
from .landauer import (
    LN2,
    analytic_erasure_costs,
    discrete_spin_bath_cost,
    landauer_property_check,
    simulate_erasure_protocol,
    tradeoff_curve,
    verify_landauer,
)
from .maxent import BlochMapSpec, choi, cp_boundary_scan, is_completely_positive, solve_gge
from .parallel import pmap
from .passivity import (
    check_cmu_complete_passivity,
    ergotropy,
    is_passive,
    n_copy_ergotropy,
    n_copy_ergotropy_result,
)
from .thermal_ops import (
    apply_thermal_operation,
    coherence_injection_demo,
    conservation_residuals,
    joint_charge_drift,
    load_thermal_op_bundle,
    MEMBERSHIP_TOL,
)

COMMANDS = (
    "gge-solve",
    "erasure-curve",
    "erasure-simulate",
    "discrete-cost",
    "passivity-check",
    "cp-check",
    "landauer-verify",
    "thermalop-check",
    "demo",
)

DEFAULTS = {
    "beta": 1.0,
    "alpha": 1.0,
    "eps": 1.0,
    "eps_min": 0.0,
    "eps_max": 5.0,
    "eps_count": 100,
    "steps": 10_000,
    "tail_tol": 1e-8,
    "tol": 1e-9,
    "max_iter": 500,
    "seed": 0,
    "format": None,
    "hbar": 1.0,
    "alpha_min": None,
    "alpha_max": None,
    "alpha_count": 100,
    "n": 1,
    "map": "pancake",
    "r": 1.0,
    "z_offset": 0.0,
    "grid": 1001,
    "trials": 1000,
}


class UsageError(Exception):
    """Invalid configuration or input; maps to exit code 1."""


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    parameters: dict = field(default_factory=dict)

    def param(self, name):
        if name in self.parameters and self.parameters[name] is not None:
            return self.parameters[name]
        return DEFAULTS.get(name)


# --------------------------------------------------------------------------
# I/O helpers


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def _require_input(cfg: RunConfig):
    if not cfg.input_path:
        raise UsageError(f"{cfg.command} needs --input")
    obj = _load_json(cfg.input_path)
    if not isinstance(obj, dict):
        raise UsageError(f"{cfg.input_path}: top level must be a JSON object")
    return obj


def _get(obj: dict, key: str, where: str):
    if key not in obj:
        raise UsageError(f"{where}: missing field {key!r}")
    return obj[key]


def _operator(obj, field_name):
    try:
        return operator_from_json(obj, field_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _operators(obj: dict, key: str, where: str) -> list[np.ndarray]:
    items = _get(obj, key, where)
    if not isinstance(items, list) or not items:
        raise UsageError(f"{where}: field {key!r} must be a non-empty list of operators")
    return [_operator(x, f"{key}[{i}]") for i, x in enumerate(items)]


def _floats(obj: dict, key: str, where: str, n: int | None = None) -> list[float]:
    items = _get(obj, key, where)
    try:
        vals = [float(x) for x in items]
    except (TypeError, ValueError):
        raise UsageError(f"{where}: field {key!r} must be a list of numbers") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{where}: field {key!r} has {len(vals)} entries, expected {n}")
    return vals


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path and cfg.output_path != "-":
        path = Path(cfg.output_path)
        if path.parent and not path.parent.exists():
            raise UsageError(f"output directory {path.parent} does not exist")
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _positive(cfg, name):
    v = float(cfg.param(name))
    if not (v > 0 and math.isfinite(v)):
        raise UsageError(f"--{name.replace('_', '-')} must be positive, got {v!r}")
    return v


# --------------------------------------------------------------------------
# commands


def _cmd_gge_solve(cfg):
    obj = _require_input(cfg)
    charges = _operators(obj, "charges", cfg.input_path)
    targets = _floats(obj, "targets", cfg.input_path, len(charges))
    tol = float(obj.get("tol", cfg.param("tol")))
    max_iter = int(obj.get("max_iter", cfg.param("max_iter")))
    try:
        sol = solve_gge(charges, targets, tol=tol, max_iter=max_iter)
    except DegenerateChargesError as exc:
        raise UsageError(str(exc)) from None
    out = sol.to_json()
    out["state"] = operator_to_json(sol.state.matrix)
    _emit(cfg, _dump_json(out))


def _eps_grid(cfg):
    n = int(cfg.param("eps_count"))
    lo, hi = float(cfg.param("eps_min")), float(cfg.param("eps_max"))
    if n < 1 or lo < 0 or hi < lo:
        raise UsageError("need eps_count >= 1 and 0 <= eps_min <= eps_max")
    return np.linspace(lo, hi, n)


def _cmd_erasure_curve(cfg):
    beta, alpha = _positive(cfg, "beta"), _positive(cfg, "alpha")
    curve = tradeoff_curve(beta, alpha, _eps_grid(cfg))
    if (cfg.param("format") or "csv") == "json":
        _emit(cfg, _dump_json({
            "beta": beta,
            "alpha": alpha,
            "epsilon": curve.epsilon,
            "dH": curve.dH,
            "dQ": curve.dQ,
            "identity_residual": curve.identity_residual,
        }))
    else:
        _emit(cfg, curve.to_csv())


def _cmd_erasure_simulate(cfg):
    beta, alpha = _positive(cfg, "beta"), _positive(cfg, "alpha")
    eps = float(cfg.param("eps"))
    trace = simulate_erasure_protocol(eps, beta, alpha, int(cfg.param("steps")), float(cfg.param("tail_tol")))
    dh, dq = analytic_erasure_costs(eps, beta, alpha)
    out = trace.to_json()
    out["analytic"] = {"dH_tot": dh, "dQ_tot": dq}
    out["weighted_total"] = beta * trace.dH_tot + alpha * trace.dQ_tot
    _emit(cfg, _dump_json(out))


def _cmd_discrete_cost(cfg):
    hbar = _positive(cfg, "hbar")
    tail = _positive(cfg, "tail_tol")
    if cfg.param("alpha_min") is not None or cfg.param("alpha_max") is not None:
        lo, hi = float(cfg.param("alpha_min") or 0.01), float(cfg.param("alpha_max") or 50.0)
        n = int(cfg.param("alpha_count"))
        if not (0 < lo <= hi) or n < 1:
            raise UsageError("need 0 < alpha_min <= alpha_max and alpha_count >= 1")
        alphas = np.geomspace(lo, hi, n)
        rows = [(a, discrete_spin_bath_cost(a, hbar, tail), LN2 / a) for a in alphas]
        if (cfg.param("format") or "csv") == "json":
            _emit(cfg, _dump_json([{"alpha": a, "discrete": d, "continuous": c} for a, d, c in rows]))
        else:
            lines = ["alpha,discrete,continuous"] + [",".join(f"{v:.17g}" for v in r) for r in rows]
            _emit(cfg, "\n".join(lines) + "\n")
        return
    alpha = _positive(cfg, "alpha")
    _emit(cfg, _dump_json({
        "alpha": alpha,
        "hbar": hbar,
        "value": discrete_spin_bath_cost(alpha, hbar, tail),
        "continuous": LN2 / alpha,
        "series_start_index": 0,
    }))


def _cmd_passivity_check(cfg):
    obj = _require_input(cfg)
    rho = _operator(_get(obj, "state", cfg.input_path), "state")
    c = _operator(_get(obj, "charge", cfg.input_path), "charge")
    n = int(obj.get("n", cfg.param("n")))
    tol = float(obj.get("tol", 1e-10))
    DensityMatrix(rho)
    HermitianOperator(c)
    rep = is_passive(rho, c, tol)
    res = ergotropy(rho, c, tol) if n == 1 else n_copy_ergotropy_result(rho, c, n, tol)
    _emit(cfg, _dump_json({
        "value": res.value,
        "passive": res.passive,
        "commutator_norm": rep.commutator_norm,
        "n": n,
        "witness_permutation": list(res.witness_permutation),
        "single_copy": rep.to_json(),
    }))


def _bloch_map(cfg) -> tuple[BlochMapSpec, float | None]:
    if cfg.input_path:
        obj = _require_input(cfg)
        try:
            lin = np.array(_get(obj, "linear", cfg.input_path), dtype=float)
            off = np.array(obj.get("offset", [0, 0, 0]), dtype=float)
        except (TypeError, ValueError):
            raise UsageError(f"{cfg.input_path}: linear/offset must be numeric") from None
        if lin.shape != (3, 3) or off.shape != (3,):
            raise UsageError(f"{cfg.input_path}: linear must be 3x3 and offset length 3")
        return BlochMapSpec(lin, off), None
    name = cfg.param("map")
    if name == "pancake":
        eps = float(cfg.param("z_offset"))
        return BlochMapSpec.pancake(float(cfg.param("r")), eps), eps
    if name == "identity":
        return BlochMapSpec.identity(), None
    if name == "depolarizing":
        return BlochMapSpec.depolarizing(), None
    raise UsageError(f"unknown map {name!r} (pancake, identity, depolarizing)")


def _cmd_cp_check(cfg):
    spec, eps = _bloch_map(cfg)
    j = choi(spec)
    verdict = is_completely_positive(spec, float(cfg.param("tol")) if cfg.parameters.get("tol") else 1e-10)
    out = {
        "map": spec.to_json(),
        "choi_eigenvalues": j.eigenvalues,
        "min_eigenvalue": j.min_eigenvalue,
        "completely_positive": verdict.completely_positive,
        "trace_preservation_residual": j.trace_preservation_residual,
    }
    if eps is not None:
        grid = int(cfg.param("grid"))
        out["boundary_scan"] = {
            "z_offset": eps,
            "grid": grid,
            "r_star": cp_boundary_scan(eps, grid),
            "necessary_bound": (1 + eps) / 2,
        }
    _emit(cfg, _dump_json(out))


def _cmd_landauer_verify(cfg):
    if cfg.input_path:
        obj = _require_input(cfg)
        rho = _operator(_get(obj, "system_state", cfg.input_path), "system_state")
        charges = _operators(obj, "bath_charges", cfg.input_path)
        mus = _floats(obj, "bath_multipliers", cfg.input_path, len(charges))
        u = _operator(_get(obj, "unitary", cfg.input_path), "unitary")
        DensityMatrix(rho)
        rep = verify_landauer(rho, ChargeSet(charges, mus), u, obj.get("dims"))
        _emit(cfg, _dump_json(rep.to_json()))
        return
    out = landauer_property_check(int(cfg.param("trials")), int(cfg.param("seed")))
    out["identity_ok"] = out["max_identity_residual"] <= 1e-9
    out["bound_ok"] = out["min_slack"] >= -1e-9
    _emit(cfg, _dump_json(out))


def _cmd_thermalop_check(cfg):
    obj = _require_input(cfg)
    try:
        spec, state = load_thermal_op_bundle(obj)
    except ValueError as exc:
        raise UsageError(f"{cfg.input_path}: {exc}") from None
    res = conservation_residuals(spec)
    tol = float(obj.get("tol", MEMBERSHIP_TOL))
    out = {"residuals": res, "member": all(r <= tol for r in res), "tol": tol}
    if state is not None:
        DensityMatrix(state)
        out["output_state"] = operator_to_json(apply_thermal_operation(spec, state).matrix)
        out["joint_charge_drift"] = joint_charge_drift(spec, state)
    _emit(cfg, _dump_json(out))


def _demo_summary(seed: int) -> dict:
    def gallery():
        h = np.diag([0.0, 1.0]).astype(complex)
        c1 = np.diag([3.0, 0.0]).astype(complex)
        commuting = gge_state(ChargeSet([h, c1], [1.0, 1.0]))
        lx, ly, lz = spin_operators(0.5)
        spin = gge_state(ChargeSet([lz], [0.8]))
        plus = np.full((2, 2), 0.5, dtype=complex)
        plus_state = gge_state(ChargeSet([plus, np.diag([1.0, 0]), np.diag([0, 1.0])], [0.7] * 3))
        return {
            "commuting_H_ergotropy": ergotropy(commuting, h).value,
            "commuting_Cmu_ergotropy": ergotropy(commuting, h + c1).value,
            "spin_Lx_ergotropy": ergotropy(spin, lx).value,
            "spin_Lz_ergotropy": ergotropy(spin, lz).value,
            "plus_C1_ncopy_ergotropy": [n_copy_ergotropy(plus_state, plus, n) for n in (1, 2, 3)],
        }

    def pancake():
        j = choi(BlochMapSpec.pancake())
        return {
            "choi_eigenvalues": j.eigenvalues,
            "boundary": {str(e): cp_boundary_scan(e, 1001) for e in (0.0, 0.2, 0.5, 1.0)},
        }

    def protocol():
        tr = simulate_erasure_protocol(1.0, 1.0, 1.0, 10_000, 1e-8)
        dh, dq = analytic_erasure_costs(1.0, 1.0, 1.0)
        return {"dH_tot": tr.dH_tot, "dQ_tot": tr.dQ_tot, "analytic": [dh, dq]}

    def cmu():
        lx, ly, lz = spin_operators(0.5)
        cs = ChargeSet([np.eye(2), lx, ly, lz], [1.0, 0.3, -0.5, 0.9])
        return check_cmu_complete_passivity(cs, 3).to_json()

    tasks = {
        "gallery": gallery,
        "pancake": pancake,
        "protocol": protocol,
        "cmu_complete_passivity": cmu,
        "coherence_injection": lambda: coherence_injection_demo(1.0),
        "landauer_monte_carlo": lambda: landauer_property_check(200, seed),
    }
    names = list(tasks)
    results = pmap(lambda k: tasks[k](), names)
    return dict(zip(names, results))


def _cmd_demo(cfg):
    out_dir = Path(cfg.output_path or "demo_output")
    out_dir.mkdir(parents=True, exist_ok=True)
    eps = np.linspace(0.0, 10.0, 201)
    curves = {"fig2_a.csv": (1.0, 1.0), "fig2_b.csv": (2.0, 1.0), "fig2_c.csv": (1.0, 2.0)}
    endpoints = {}
    for name, (beta, alpha) in curves.items():
        grid = np.append(eps, np.inf)
        curve = tradeoff_curve(beta, alpha, grid)
        (out_dir / name).write_text(curve.to_csv())
        endpoints[name] = {
            "beta": beta,
            "alpha": alpha,
            "eps_zero": [curve.dH[0], curve.dQ[0]],
            "eps_inf": [curve.dH[-1], curve.dQ[-1]],
            "max_identity_residual": float(np.max(curve.identity_residual)),
        }
    alphas = np.geomspace(0.05, 50.0, 200)
    lines = ["alpha,discrete,continuous"]
    for a in alphas:
        lines.append(f"{a:.17g},{discrete_spin_bath_cost(a):.17g},{LN2 / a:.17g}")
    (out_dir / "fig3.csv").write_text("\n".join(lines) + "\n")

    summary = {
        "fig2": endpoints,
        "fig3": {
            "discrete_at_alpha_50": discrete_spin_bath_cost(50.0),
            "continuous_at_alpha_1": LN2,
        },
        "kernel_backend": kernels.BACKEND,
    }
    summary.update(_demo_summary(int(cfg.param("seed"))))
    (out_dir / "summary.json").write_text(_dump_json(summary))
    sys.stderr.write(f"wrote demo outputs to {out_dir}\n")


HANDLERS = {
    "gge-solve": _cmd_gge_solve,
    "erasure-curve": _cmd_erasure_curve,
    "erasure-simulate": _cmd_erasure_simulate,
    "discrete-cost": _cmd_discrete_cost,
    "passivity-check": _cmd_passivity_check,
    "cp-check": _cmd_cp_check,
    "landauer-verify": _cmd_landauer_verify,
    "thermalop-check": _cmd_thermalop_check,
    "demo": _cmd_demo,
}


def run(config: RunConfig) -> int:
    if config.command not in HANDLERS:
        sys.stderr.write(f"error: unknown command {config.command!r}\n")
        return 1
    try:
        HANDLERS[config.command](config)
    except MaxIterationsError as exc:
        sys.stderr.write(f"error: solver did not converge: {exc}\n")
        return 2
    except InfeasibleTargetsError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (UsageError, GGEThermoError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of parameters; flags take precedence")
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--beta", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--eps", type=float, help="swap energy for erasure-simulate")
    common.add_argument("--eps-min", type=float)
    common.add_argument("--eps-max", type=float)
    common.add_argument("--eps-count", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--tail-tol", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--hbar", type=float)
    common.add_argument("--alpha-min", type=float)
    common.add_argument("--alpha-max", type=float)
    common.add_argument("--alpha-count", type=int)
    common.add_argument("--n", type=int, help="number of copies")
    common.add_argument("--map", choices=("pancake", "identity", "depolarizing"))
    common.add_argument("--r", type=float, help="pancake disc radius")
    common.add_argument("--z-offset", type=float, help="pancake disc height")
    common.add_argument("--grid", type=int)
    common.add_argument("--trials", type=int)

    parser = argparse.ArgumentParser(
        prog="gge-thermo",
        description="Erasure trade-offs, GGE solving and passivity checks for multiple conserved charges.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = vars(_build_parser().parse_args(argv))
    command = ns.pop("command")
    params: dict = {}
    cfg_path = ns.pop("config", None)
    if cfg_path:
        data = _load_json(cfg_path)
        if not isinstance(data, dict):
            raise UsageError(f"{cfg_path}: config must be a JSON object")
        params.update({k.replace("-", "_"): v for k, v in data.items()})
    params.update(ns)
    return RunConfig(
        command=command,
        input_path=params.pop("input", None),
        output_path=params.pop("output", None),
        parameters=params,
    )


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
