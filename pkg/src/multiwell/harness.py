"""Command-line front end, experiment presets, and the reproducibility layer.

Every run resolves a JSON config (from a file or a named preset), executes
one subcommand, and writes its artifacts plus a manifest into the output
directory.  Numeric CSV artifacts are deterministic byte-for-byte for a
fixed config; wall-clock timings go to separate sidecar files so the main
tables stay comparable across runs.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, phasefield, sharp
from .errors import ConfigError, InfeasibleError, NumericError
from .geodesic import Curve, GeodesicConfig, d_W, minimize_geodesic, ConformalFactor
from .potential import from_descriptor, validate_assumptions
from .profile import build_profile, default_lambda, profile_energy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4

THREADS_ENV = "MULTIWELL_THREADS"


def _fmt(x):
    """Floats at 17 significant digits round-trip exactly."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _geodesic_config(cfg):
    kw = {}
    for key in ("nodes", "max_iter", "grad_tol", "cost_tol"):
        if key in cfg:
            kw[key] = cfg[key]
    if "inits" in cfg:
        kw["extra_inits"] = tuple(Curve(np.asarray(c, dtype=float))
                                  for c in cfg["inits"])
    return GeodesicConfig(**kw)


def _require(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"config is missing required keys: {missing}")


# ---------------------------------------------------------------------------
# Subcommand implementations (each returns a list of emitted file names)
# ---------------------------------------------------------------------------

def cmd_geodesic(config, out):
    _require(config, "potential")
    pot = from_descriptor(config["potential"])
    gcfg = _geodesic_config(config)
    files = []
    if "well_scan" in config:
        scan = config["well_scan"]
        _require(scan, "points", "labels")
        i, j = scan["labels"]
        bound = scan.get("reference_bound")
        rows = []
        for x in scan["points"]:
            z = pot.well_values(x)
            res = d_W(pot, x, z[i - 1], z[j - 1], gcfg)
            row = [*(float(v) for v in np.atleast_1d(x)), res.cost, res.length,
                   res.iterations]
            if bound and bound.get("kind") == "power-of-first-coordinate":
                ref = float(np.atleast_1d(x)[0]) ** bound["exponent"]
                row += [ref, int(res.cost <= ref * (1.0 + 1e-3))]
            rows.append(row)
        header = [f"x{k + 1}" for k in range(pot.domain.dim)]
        header += ["cost", "length", "iterations"]
        if bound:
            header += ["reference_bound", "within_bound"]
        write_csv(os.path.join(out, "well_scan.csv"), header, rows)
        files.append("well_scan.csv")
        return files
    _require(config, "x", "p", "q")
    res = (d_W(pot, config["x"], config["p"], config["q"], gcfg)
           if config.get("factor", "frozen") == "frozen"
           else minimize_geodesic(
               ConformalFactor.region_minimized(pot, pot.domain),
               config["p"], config["q"], gcfg))
    with open(os.path.join(out, "geodesic.json"), "w") as fh:
        json.dump({"cost": res.cost, "length": res.length,
                   "iterations": res.iterations, "winner": res.winner,
                   "converged": res.converged,
                   "nodes": res.curve.nodes.tolist()}, fh, indent=2)
    write_csv(os.path.join(out, "curve.csv"),
              ["node"] + [f"u{k + 1}" for k in range(res.curve.nodes.shape[1])],
              [[k, *row] for k, row in enumerate(res.curve.nodes)])
    return ["geodesic.json", "curve.csv"]


def cmd_profile(config, out):
    _require(config, "potential", "x", "eps")
    pot = from_descriptor(config["potential"])
    eps = float(config["eps"])
    lam = float(config.get("lambda", default_lambda(eps)))
    if "curve" in config:
        curve = Curve(np.asarray(config["curve"], dtype=float))
    else:
        _require(config, "p", "q")
        curve = d_W(pot, config["x"], config["p"], config["q"],
                    _geodesic_config(config)).curve
    prof = build_profile(pot, config["x"], curve, eps, lam,
                         config.get("quadrature_nodes", 400))
    t, g, u, integrand = prof.sample(config.get("samples", 400))
    write_csv(os.path.join(out, "profile.csv"),
              ["t", "g"] + [f"u{k + 1}" for k in range(u.shape[1])] + ["integrand"],
              [[t[k], g[k], *u[k], integrand[k]] for k in range(len(t))])
    with open(os.path.join(out, "profile.json"), "w") as fh:
        json.dump({"tau": prof.tau, "eps": eps, "lambda": lam,
                   "energy": profile_energy(prof),
                   "curve_length": prof.curve.length()}, fh, indent=2)
    return ["profile.csv", "profile.json"]


def _scenario_from_config(config, pot):
    constraint = None
    c = config.get("constraint")
    if c:
        if c.get("type") == "mass":
            constraint = ("mass", np.asarray(c["value"], dtype=float))
        elif c.get("type") == "dirichlet":
            constraint = ("dirichlet", np.asarray(c["left"], dtype=float),
                          np.asarray(c["right"], dtype=float))
        else:
            raise ConfigError(f"unknown constraint type {c.get('type')!r}")
    return phasefield.Scenario(
        potential=pot,
        labels=tuple(config.get("labels", (1, 2))),
        constraint=constraint,
        init=config.get("init", "step"),
        step_at=float(config.get("step_at", 0.0)),
        h_over_eps=float(config.get("h_over_eps", 5.0)),
        name=config.get("name", "scenario"))


def _flow_config(config):
    kw = {}
    for key in ("max_iter", "tol", "patience"):
        if key in config:
            kw[key] = config[key]
    return phasefield.FlowConfig(**kw)


def _write_field(path, fld):
    pts = fld.grid.points()
    vals = fld.values.reshape(-1, fld.m)
    header = [f"x{k + 1}" for k in range(fld.grid.dim)]
    header += [f"u{k + 1}" for k in range(fld.m)]
    write_csv(path, header, np.column_stack([pts, vals]))


def cmd_minimize(config, out):
    _require(config, "potential", "eps")
    pot = from_descriptor(config["potential"])
    eps = float(config["eps"])
    scen = _scenario_from_config(config, pot)
    res = phasefield.minimize(pot, scen.build_init(eps), eps, _flow_config(config))
    _write_field(os.path.join(out, "field.csv"), res.field)
    with open(os.path.join(out, "minimize.json"), "w") as fh:
        json.dump({"eps": eps, "energy": res.energy, "iterations": res.iterations,
                   "converged": res.converged, "mass_error": res.mass_error,
                   "interface": phasefield.interface_estimate_1d(res.field)
                   if pot.domain.dim == 1 else None,
                   "seconds": res.seconds}, fh, indent=2)
    return ["field.csv", "minimize.json"]


def cmd_sweep(config, out, threads=1):
    _require(config, "potential", "epsilons")
    pot = from_descriptor(config["potential"])
    scen = _scenario_from_config(config, pot)
    fcfg = _flow_config(config)
    eps_list = sorted((float(e) for e in config["epsilons"]), reverse=True)
    warm = bool(config.get("warm_start", True))
    if warm or threads <= 1:
        record, final = phasefield.epsilon_sweep(pot, scen, eps_list, fcfg,
                                                 warm_start=warm)
        rows = record.rows
    else:
        def one(eps):
            res = phasefield.minimize(pot, scen.build_init(eps), eps, fcfg)
            return phasefield.SweepRow(
                eps=eps, energy=res.energy,
                interface=phasefield.interface_estimate_1d(res.field),
                iterations=res.iterations, seconds=res.seconds), res.field
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(one, eps_list))
        rows = [r for r, _ in done]
        final = done[-1][1]
    write_csv(os.path.join(out, "sweep.csv"),
              ["epsilon", "energy", "interface", "iterations"],
              [[r.eps, r.energy, r.interface, r.iterations] for r in rows])
    write_csv(os.path.join(out, "sweep_timing.csv"),
              ["epsilon", "seconds"], [[r.eps, r.seconds] for r in rows])
    _write_field(os.path.join(out, "final_field.csv"), final)
    return ["sweep.csv", "sweep_timing.csv", "final_field.csv"]


def cmd_sharp(config, out):
    _require(config, "potential")
    pot = from_descriptor(config["potential"])
    cache = sharp.DistanceCache(pot, _geodesic_config(config))
    if "segments" in config:
        mesh = sharp.InterfaceMesh2D(tuple(
            (s["a"], s["b"], s["labels"][0], s["labels"][1])
            for s in config["segments"]))
        total, breakdown = sharp.F0_energy_2d(
            pot, mesh, config.get("quadrature_per_segment", 8), cache)
    elif "jumps" in config:
        cfgj = sharp.JumpConfiguration1D(tuple(config["jumps"]),
                                         tuple(config["labels"]))
        if "boundary" in config:
            g = (np.asarray(config["boundary"]["left"], dtype=float),
                 np.asarray(config["boundary"]["right"], dtype=float))
            total, breakdown = sharp.dirichlet_energy(pot, cfgj, g, cache=cache)
        else:
            total, breakdown = sharp.F0_energy_1d(pot, cfgj, cache)
    elif "minimal_jump" in config:
        mj = config["minimal_jump"]
        x_star, total = sharp.minimal_jump_1d(
            pot, tuple(mj["labels"]), mass=mj.get("mass"), cache=cache)
        breakdown = [{"x_star": float(np.atleast_1d(x_star)[0]), "cost": total}]
    else:
        raise ConfigError("sharp config needs 'jumps', 'segments' or 'minimal_jump'")
    with open(os.path.join(out, "sharp.json"), "w") as fh:
        json.dump({"F0": total, "breakdown": breakdown}, fh, indent=2)
    return ["sharp.json"]


def cmd_validate(config, out):
    _require(config, "potential")
    pot = from_descriptor(config["potential"])
    report = validate_assumptions(pot, config.get("sample_density", 1000),
                                  seed=config.get("seed", 0))
    with open(os.path.join(out, "validate.json"), "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
    return ["validate.json"]


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_DW = {"name": "scalar-double-well", "domain": {"lo": [-1.0], "hi": [1.0]}}
_MOD = {"name": "modulated", "domain": {"lo": [-1.0], "hi": [1.0]},
        "modulation": "one-plus-norm-squared"}
_CEX = {"name": "product-distance", "domain": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
        "wells": ["axis-projection", "parabolic-sheet"]}

PRESETS = {
    "double-well-sweep": {
        "command": "sweep",
        "description": "two constant wells on the line, zero mass, four eps rows",
        "config": {"potential": _DW, "epsilons": [0.1, 0.05, 0.02, 0.01],
                   "constraint": {"type": "mass", "value": [0.0]},
                   "name": "double-well-sweep"},
    },
    "moving-wells-1d": {
        "command": "sweep",
        "description": "space-modulated double well, zero mass, interface drifts to the cheapest point",
        "config": {"potential": _MOD, "epsilons": [0.1, 0.05, 0.02, 0.01],
                   "constraint": {"type": "mass", "value": [0.0]},
                   "name": "moving-wells-1d"},
    },
    "dirichlet-1d": {
        "command": "sweep",
        "description": "pinned boundary values, one of them off the wells",
        "config": {"potential": _DW, "epsilons": [0.1, 0.05, 0.02, 0.01],
                   "constraint": {"type": "dirichlet", "left": [-1.0], "right": [0.3]},
                   "init": "constant", "name": "dirichlet-1d"},
    },
    "counterexample": {
        "command": "geodesic",
        "description": "touching wells: distance between them decays like the sixth power",
        "config": {"potential": _CEX, "nodes": 64, "max_iter": 600,
                   "well_scan": {
                       "points": [[x, 0.0] for x in
                                  [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]],
                       "labels": [1, 2],
                       "reference_bound": {"kind": "power-of-first-coordinate",
                                           "exponent": 6}}},
    },
}


def list_presets():
    return [(name, PRESETS[name]["description"]) for name in sorted(PRESETS)]


# ---------------------------------------------------------------------------
# Run dispatch and manifest
# ---------------------------------------------------------------------------

_COMMANDS = {
    "geodesic": cmd_geodesic,
    "profile": cmd_profile,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "sharp": cmd_sharp,
    "validate": cmd_validate,
}


def run(command, config, out, threads=1):
    """Execute one subcommand and write artifacts plus manifest.json.

    Returns (exit_code, manifest_dict).  Module errors are recorded in the
    manifest with the matching nonzero exit status.
    """
    os.makedirs(out, exist_ok=True)
    manifest = {
        "command": command,
        "config_hash": config_hash(config),
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "files": [],
        "status": "ok",
    }
    code = EXIT_OK
    try:
        if command not in _COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        if command == "sweep":
            manifest["files"] = _COMMANDS[command](config, out, threads=threads)
        else:
            manifest["files"] = _COMMANDS[command](config, out)
    except ConfigError as exc:
        manifest["status"] = "config-error"
        manifest["error"] = str(exc)
        code = EXIT_CONFIG
    except InfeasibleError as exc:
        manifest["status"] = "infeasible"
        manifest["error"] = str(exc)
        code = EXIT_INFEASIBLE
    except (NumericError, FloatingPointError) as exc:
        manifest["status"] = "numeric-error"
        manifest["error"] = str(exc)
        code = EXIT_NUMERIC
    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    # list what is actually on disk so the manifest stays complete even
    # after a partial failure
    manifest["files"] = sorted(
        os.path.relpath(os.path.join(root, f), out)
        for root, _, names in os.walk(out) for f in names
        if os.path.relpath(os.path.join(root, f), out) != "manifest.json"
    ) + ["manifest.json"]
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return code, manifest


def _load_config(args):
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; "
                              f"known: {sorted(PRESETS)}")
        preset = PRESETS[args.preset]
        if preset["command"] != args.command:
            raise ConfigError(
                f"preset {args.preset!r} belongs to the "
                f"{preset['command']!r} subcommand")
        config = json.loads(json.dumps(preset["config"]))
        command = preset["command"]
    else:
        if not args.config:
            raise ConfigError("either --config or --preset is required")
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        command = args.command
    if args.seed is not None:
        config["seed"] = args.seed
    return command, config


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="multiwell",
        description="geodesic well distances, transition profiles, and "
                    "diffuse/sharp interface energies")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*_COMMANDS, "presets"]:
        p = sub.add_parser(name)
        if name == "presets":
            continue
        p.add_argument("--config", help="path to a JSON config")
        p.add_argument("--preset", help="name of a builtin preset")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get(THREADS_ENV, "1")))
    args = parser.parse_args(argv)
    if args.command == "presets":
        for name, desc in list_presets():
            print(f"{name}: {desc}")
        return EXIT_OK
    try:
        command, config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, manifest = run(command, config, args.out, threads=args.threads)
    if manifest["status"] != "ok":
        print(f"{manifest['status']}: {manifest.get('error', '')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
