"""Command-line front end: synthesize / cluster / gate / simulate.

Configs are JSON documents validated against a per-command key schema
(unknown keys are rejected); reports are JSON with every matrix carried at
full precision next to a 2-decimal display block. Exit codes: 0 success,
2 domain-level infeasibility (with the best approximate result still
reported), 1 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import cluster as cluster_mod
from . import gsim, mbqc, modes, synth
from .errors import ConfigError, InfeasibleGraphError, MPHDError
from .matcore import DiagonalUnitary
from .presets import NAMED_TARGETS, expand_preset

SCHEMA_VERSION = 1

log = logging.getLogger("mphd")

_COMMON_KEYS = {"preset", "tolerances", "seed"}
_DETECTION_KEYS = {"modes", "pixels", "opo_phases", "detection"}
ALLOWED_KEYS = {
    "synthesize": _COMMON_KEYS | _DETECTION_KEYS | {"target", "optimizer", "branch", "enumerate"},
    "cluster": _COMMON_KEYS | _DETECTION_KEYS | {"graph", "freedom"},
    "gate": _COMMON_KEYS | _DETECTION_KEYS
    | {"target", "optimizer", "branch", "enumerate", "r", "shots", "input_squeezing"},
    "simulate": _COMMON_KEYS | _DETECTION_KEYS
    | {"target", "solution", "solution_report", "branch", "plan", "r", "shots", "csv_path"},
}

_NESTED_KEYS = {
    "modes": {"family", "n", "grid_points", "domain", "lo_index", "file"},
    "pixels": {"count", "boundaries"},
    "detection": {"matrix"},
    "target": {"matrix", "graph", "gate", "named", "identity"},
    "graph": {"adjacency", "edges", "n"},
    "gate": {"name", "s", "theta_3"},
    "tolerances": {"feasibility", "structure"},
    "optimizer": {"max_iters", "restarts", "seed", "tol"},
    "plan": {"angles", "offsets", "gains"},
    "solution": {"phases", "gains"},
    "freedom": {"euler", "matrix"},
}


def _check_keys(doc: dict, allowed: set, context: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{context} must be a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {context}; allowed: {sorted(allowed)}"
        )


def validate_config(config: dict, command: str) -> None:
    _check_keys(config, ALLOWED_KEYS[command], f"{command} config")
    for key, sub_allowed in _NESTED_KEYS.items():
        if key in config:
            _check_keys(config[key], sub_allowed, f"config.{key}")
    if "target" in config and "gate" in config.get("target", {}):
        _check_keys(config["target"]["gate"], _NESTED_KEYS["gate"], "config.target.gate")
    if "target" in config and "graph" in config.get("target", {}):
        _check_keys(config["target"]["graph"], _NESTED_KEYS["graph"], "config.target.graph")


# ---------------------------------------------------------------------------
# matrix (de)serialization

def mat_to_json(m) -> dict:
    arr = np.asarray(m, dtype=complex)
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def mat_from_json(doc, context: str = "matrix") -> np.ndarray:
    if not isinstance(doc, dict) or "re" not in doc:
        raise ConfigError(f"{context} must be an object with 're' (and optional 'im') arrays")
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise ConfigError(f"{context}: 're' and 'im' shapes differ")
    return re + 1j * im


def mat_display(m) -> list:
    arr = np.atleast_2d(np.asarray(m, dtype=complex))
    rows = []
    for row in arr:
        rows.append([f"{v.real:+.2f}{v.imag:+.2f}j" for v in row])
    return rows


def vec_display(v) -> list:
    return mat_display(np.asarray(v)[None, :])[0]


# ---------------------------------------------------------------------------
# config resolution

def _resolve_tolerance(config, args_tol=None) -> float:
    if args_tol is not None:
        return float(args_tol)
    return float(config.get("tolerances", {}).get("feasibility", 1e-9))


def _resolve_detection(config):
    """Build G (and optionally the full setup) from the config.

    Returns (g, echo, setup_or_none); an explicit detection.matrix wins over
    the modes/pixels/opo route.
    """
    if "detection" in config:
        g = mat_from_json(config["detection"]["matrix"], "detection.matrix")
        echo = {"detection": {"matrix": mat_to_json(g), "display": mat_display(g)}}
        return g, echo, None
    if "modes" not in config:
        raise ConfigError("config needs either 'detection.matrix' or a 'modes' block")
    mode_cfg = config["modes"]
    if "file" in mode_cfg:
        basis = modes.load_mode_basis(mode_cfg["file"])
    else:
        basis = modes.flip_mode_basis(
            int(mode_cfg.get("n", 4)),
            int(mode_cfg.get("grid_points", modes.DEFAULT_GRID_POINTS)),
            tuple(mode_cfg.get("domain", modes.DEFAULT_DOMAIN)),
        )
    lo_index = int(mode_cfg.get("lo_index", 0))
    pixel_cfg = config.get("pixels", {"count": basis.n_modes})
    if "boundaries" in pixel_cfg:
        partition = modes.PixelPartition(np.asarray(pixel_cfg["boundaries"], dtype=float))
    else:
        partition = modes.PixelPartition.equal(
            int(pixel_cfg.get("count", basis.n_modes)), basis.domain
        )
    opo = config.get("opo_phases", [0.0] * basis.n_modes)
    setup = modes.detection_setup(basis, lo_index, partition, opo)
    echo = {
        "modes": {
            "family": mode_cfg.get("family", "flip") if "file" not in mode_cfg else "file",
            "n": basis.n_modes,
            "grid_points": basis.grid_points,
            "domain": list(basis.domain),
            "lo_index": lo_index,
        },
        "pixels": {"boundaries": partition.boundaries.tolist()},
        "opo_phases": list(map(float, opo)),
        "u_t": mat_to_json(setup.u_t),
        "u_t_display": mat_display(setup.u_t),
        "g": mat_to_json(setup.g),
        "g_display": mat_display(setup.g),
    }
    return setup.g, echo, setup


def _graph_adjacency(doc) -> np.ndarray:
    if "adjacency" in doc:
        return cluster_mod.validate_adjacency(np.asarray(doc["adjacency"], dtype=float))
    if "edges" in doc:
        n = int(doc.get("n", 0)) or (max(max(e) for e in doc["edges"]) + 1)
        v = np.zeros((n, n))
        for edge in doc["edges"]:
            i, j = int(edge[0]), int(edge[1])
            weight = float(edge[2]) if len(edge) > 2 else 1.0
            v[i, j] = v[j, i] = weight
        return cluster_mod.validate_adjacency(v)
    raise ConfigError("graph needs 'adjacency' or 'edges'")


def _resolve_target(config, g):
    """Materialize the target unitary from the config's target block."""
    tdoc = config.get("target")
    if tdoc is None:
        raise ConfigError("config is missing the 'target' block")
    forms = {"matrix", "graph", "gate", "named", "identity"} & set(tdoc)
    if len(forms) > 1:
        raise ConfigError(f"target is ambiguous: {sorted(forms)} all given")
    if tdoc.get("identity"):
        return np.asarray(g, dtype=complex).copy(), {"identity": True}
    if "named" in tdoc:
        name = tdoc["named"]
        if name not in NAMED_TARGETS:
            raise ConfigError(f"unknown named target {name!r}")
        u = NAMED_TARGETS[name]()
        return u, {"named": name, "matrix": mat_to_json(u), "display": mat_display(u)}
    if "matrix" in tdoc:
        u = mat_from_json(tdoc["matrix"], "target.matrix")
        return u, {"matrix": mat_to_json(u), "display": mat_display(u)}
    if "graph" in tdoc:
        v = _graph_adjacency(tdoc["graph"])
        u = cluster_mod.cluster_unitary(v).u
        return u, {
            "graph": {"adjacency": v.tolist()},
            "matrix": mat_to_json(u),
            "display": mat_display(u),
        }
    if "gate" in tdoc:
        program = _resolve_program(tdoc["gate"])
        return program.u_th, {
            "gate": {
                "name": program.name,
                "angles": program.plan.angles.tolist(),
                "offsets": program.plan.offsets.tolist(),
            },
            "matrix": mat_to_json(program.u_th),
            "display": mat_display(program.u_th),
        }
    raise ConfigError("target needs one of: matrix, graph, gate, named, identity")


def _resolve_program(gate_doc) -> mbqc.GateProgram:
    name = gate_doc.get("name")
    theta_3 = float(gate_doc.get("theta_3", 0.0))
    if name == "fourier":
        return mbqc.fourier_program(theta_3)
    if name == "displacement":
        return mbqc.displacement_program(float(gate_doc.get("s", 0.0)), theta_3)
    raise ConfigError(f"unknown gate name {name!r}; available: fourier, displacement")


def _solution_to_json(sol: synth.SynthesisSolution) -> dict:
    doc = {
        "phases": sol.delta_lo.phases.tolist(),
        "delta_diag": mat_to_json(sol.delta_lo.diagonal()[None, :]),
        "delta_display": vec_display(sol.delta_lo.diagonal()),
        "gains": sol.gains.tolist(),
        "gains_display": mat_display(sol.gains),
    }
    if np.isfinite(sol.residual):
        doc["residual"] = sol.residual
    if sol.branch_id is not None:
        doc["branch"] = "".join(str(b) for b in sol.branch_id)
    return doc


def _solution_from_config(config, g) -> synth.SynthesisSolution:
    if "solution" in config:
        doc = config["solution"]
    elif "solution_report" in config:
        with open(config["solution_report"], "r", encoding="utf-8") as fh:
            report = json.load(fh)
        sols = report.get("solutions", [])
        if not sols:
            raise ConfigError(f"report {config['solution_report']} holds no solutions")
        branch = config.get("branch")
        if branch is not None:
            matches = [s for s in sols if s.get("branch") == branch]
            if not matches:
                raise ConfigError(f"no solution with branch {branch!r} in report")
            doc = matches[0]
        else:
            doc = sols[0]
    else:
        raise ConfigError("simulate needs 'solution' (inline) or 'solution_report'")
    phases = np.asarray(doc["phases"], dtype=float)
    gains = np.asarray(doc["gains"], dtype=float)
    delta = DiagonalUnitary(phases)
    u_mphd = (gains * delta.diagonal()[None, :]) @ np.asarray(g, dtype=complex)
    return synth.SynthesisSolution(
        delta_lo=delta, gains=gains, u_mphd=u_mphd, residual=float("nan"), branch_id=None
    )


def _parse_branch(text, n) -> tuple:
    bits = tuple(int(c) for c in str(text))
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ConfigError(f"branch must be {n} bits of 0/1, got {text!r}")
    return bits


# ---------------------------------------------------------------------------
# commands

def cmd_synthesize(config: dict, args=None) -> tuple[dict, int]:
    tol = _resolve_tolerance(config, getattr(args, "tol", None))
    g, det_echo, _ = _resolve_detection(config)
    u_th, target_echo = _resolve_target(config, g)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "command": "synthesize",
        "config": {**det_echo, "target": target_echo, "tolerance": tol},
    }
    fre = synth.feasibility(u_th, g, tol)
    report["feasibility"] = {
        "feasible": fre.feasible,
        "offdiag_residual": fre.offdiag_residual,
        "modulus_residual": fre.modulus_residual,
        "tol": tol,
        "d_candidate": mat_to_json(fre.d_candidate),
        "d_display": mat_display(fre.d_candidate),
    }
    if fre.feasible:
        branch_arg = getattr(args, "branch", None) or config.get("branch")
        if branch_arg is not None:
            bits = _parse_branch(branch_arg, fre.dim)
            sols = [synth.solve_exact(fre, g, u_th, bits)]
        elif config.get("enumerate", fre.dim <= 8):
            sols = synth.enumerate_solutions(fre, g, u_th)
        else:
            sols = [synth.solve_exact(fre, g, u_th)]
        report["solutions"] = [_solution_to_json(s) for s in sols]
        return report, 0
    opts = config.get("optimizer", {})
    seed = config.get("seed", opts.get("seed", 0))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    result = synth.solve_approx(
        u_th,
        g,
        max_iters=int(opts.get("max_iters", 200)),
        restarts=int(opts.get("restarts", 8)),
        seed=int(seed),
        tol=float(opts.get("tol", tol)),
    )
    report["approx"] = {
        "residual": result.solution.residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "objective_trace": result.objective_trace,
        "solution": _solution_to_json(result.solution),
    }
    report["solutions"] = []
    return report, 2


def cmd_cluster(config: dict, args=None) -> tuple[dict, int]:
    if "graph" not in config:
        raise ConfigError("cluster command needs a 'graph' block")
    v = _graph_adjacency(config["graph"])
    freedom = None
    fdoc = config.get("freedom")
    if fdoc is not None:
        if "euler" in fdoc:
            if v.shape[0] != 3:
                raise ConfigError("euler freedom is only defined for 3-vertex graphs")
            freedom = cluster_mod.euler_orthogonal(*map(float, fdoc["euler"]))
        else:
            freedom = np.asarray(fdoc["matrix"], dtype=float)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "command": "cluster",
        "config": {"graph": {"adjacency": v.tolist()}},
    }
    try:
        solution = cluster_mod.cluster_unitary(v, freedom)
    except InfeasibleGraphError as exc:
        report["infeasible"] = {"message": str(exc), "residual": exc.residual}
        return report, 2
    x_s = cluster_mod.symmetric_x(solution.a)
    validation = cluster_mod.validate_cluster(solution.u, v)
    report.update(
        {
            "a": solution.a.tolist(),
            "a_display": mat_display(solution.a),
            "x_s": x_s.tolist(),
            "x_s_display": mat_display(x_s),
            "freedom": solution.orthogonal_freedom.tolist(),
            "u": mat_to_json(solution.u),
            "u_display": mat_display(solution.u),
            "validation": {"passed": validation.passed, "residuals": validation.residuals},
        }
    )
    if "modes" in config or "detection" in config:
        tol = _resolve_tolerance(config, getattr(args, "tol", None))
        g, det_echo, _ = _resolve_detection(config)
        report["config"].update(det_echo)
        fre = synth.feasibility(solution.u, g, tol)
        report["feasibility"] = {
            "feasible": fre.feasible,
            "offdiag_residual": fre.offdiag_residual,
            "modulus_residual": fre.modulus_residual,
            "tol": tol,
            "d_candidate": mat_to_json(fre.d_candidate),
            "d_display": mat_display(fre.d_candidate),
        }
    return report, 0


def cmd_gate(config: dict, args=None) -> tuple[dict, int]:
    tdoc = config.get("target", {})
    if "gate" not in tdoc:
        raise ConfigError("gate command needs target.gate (fourier | displacement)")
    program = _resolve_program(tdoc["gate"])
    synth_report, code = cmd_synthesize(config, args)
    report = dict(synth_report)
    report["command"] = "gate"
    report["program"] = {
        "name": program.name,
        "angles": program.plan.angles.tolist(),
        "offsets": program.plan.offsets.tolist(),
        "gains": program.plan.gains.tolist(),
        "target_gate": np.asarray(program.target_gate).tolist(),
    }
    if config.get("r") is not None:
        r = float(config["r"])
        seed = config.get("seed", 0)
        if getattr(args, "seed", None) is not None:
            seed = args.seed
        r_in = float(config.get("input_squeezing", 1.0))
        input_state = gsim.squeezed_input(1, r_in, ["q"])
        output, verification = gsim.run_gate_program(program, input_state, r, seed=int(seed))
        report["verification"] = {
            "r": r,
            "shots": int(config["shots"]) if config.get("shots") is not None else None,
            "input_squeezing": r_in,
            "cov_distance": verification.cov_distance,
            "mean_distance": verification.mean_distance,
            "offset_displacement": verification.offset_displacement.tolist(),
            "input_transfer": verification.input_transfer.tolist(),
            "outcomes": verification.outcomes.tolist(),
            "passed": verification.passed,
            "output_mean": output.mean.tolist(),
            "output_cov": output.cov.tolist(),
        }
    return report, code


def cmd_simulate(config: dict, args=None) -> tuple[dict, int]:
    g, det_echo, setup = _resolve_detection(config)
    if setup is None:
        n = g.shape[0]
        setup = modes.DetectionSetup(
            u_t=g,
            delta_opo=DiagonalUnitary.identity(n),
            g=g,
            lo_index=0,
            kappa=np.ones(n),
        )
    sol = _solution_from_config(config, setup.g)
    n = setup.g.shape[0]
    pdoc = config.get("plan", {})
    plan = mbqc.MeasurementPlan(
        angles=pdoc.get("angles", [0.0] * n),
        offsets=pdoc.get("offsets"),
        gains=pdoc.get("gains"),
    )
    r = float(config.get("r", 1.0))
    shots = int(config.get("shots", 1000))
    seed = config.get("seed", 0)
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    result = gsim.simulate_mphd(setup, sol, plan, r, shots, int(seed))
    csv_path = config.get("csv_path", "mphd_samples.csv")
    gsim.export_samples_csv(result, csv_path)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": {
            **det_echo,
            "plan": {
                "angles": plan.angles.tolist(),
                "offsets": plan.offsets.tolist(),
                "gains": plan.gains.tolist(),
            },
            "r": r,
            "shots": shots,
            "seed": int(seed),
        },
        "solution": _solution_to_json(sol),
        "csv_path": str(csv_path),
        "sample_mean": result.sample_mean.tolist(),
        "sample_cov": result.sample_cov.tolist(),
        "analytic_mean": result.analytic_mean.tolist(),
        "analytic_cov": result.analytic_cov.tolist(),
        "staged_vs_direct_residual": result.staged_vs_direct_residual,
    }
    if "target" in config:
        u_th, target_echo = _resolve_target(config, setup.g)
        report["config"]["target"] = target_echo
        report["solution"]["residual"] = synth.verify_solution(
            synth.SynthesisSolution(
                delta_lo=sol.delta_lo,
                gains=sol.gains,
                u_mphd=sol.u_mphd,
                residual=0.0,
            ),
            u_th,
            setup.g,
        )
    return report, 0


COMMANDS = {
    "synthesize": cmd_synthesize,
    "cluster": cmd_cluster,
    "gate": cmd_gate,
    "simulate": cmd_simulate,
}


def _write_report(report: dict, out_path, elapsed: float) -> None:
    report["timing"] = {"seconds": elapsed}
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path is None or out_path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mphd",
        description="Synthesize and verify multi-pixel homodyne detection networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="report path (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--branch", default=None, help="square-root branch bits, e.g. 1001")
        p.add_argument("--tol", type=float, default=None, help="override feasibility tolerance")
    return parser


def run(argv=None) -> int:
    level = os.environ.get("MPHD_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        user_keys = set(config)
        config = expand_preset(config)
        # preset fragments may carry keys other commands do not consume;
        # user-supplied keys stay subject to strict validation
        for key in list(config):
            if key not in ALLOWED_KEYS[args.command] and key not in user_keys:
                del config[key]
        validate_config(config, args.command)
        log.info("running %s with config %s", args.command, args.config)
        report, code = COMMANDS[args.command](config, args)
    except (MPHDError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"mphd {args.command}: error: {exc}\n")
        return 1
    _write_report(report, args.out, time.perf_counter() - started)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
