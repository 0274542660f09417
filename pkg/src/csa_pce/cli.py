"""Command line entry point: ``csa-pce <subcommand> --config cfg.json --out dir``.

Every subcommand writes a CSV with a header row and a ``<name>.provenance.json``
sidecar.  Failures print one JSON object on stderr and exit nonzero
(2 for configuration errors, 1 for runtime errors).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import diagnostics, experiments
from .l1_solver import RecoveryProblem, bpdn
from .preconditioner import assemble_system, design_matrix, weights_for
from .sampling import STRATEGIES, draw, family_from_descriptor

FAMILY = {
    "oneOf": [
        {"enum": ["legendre", "hermite", "laguerre"]},
        {
            "type": "object",
            "properties": {
                "kind": {"enum": ["jacobi", "legendre", "hermite", "laguerre"]},
                "a": {"type": "number", "exclusiveMinimum": -1},
                "b": {"type": "number", "exclusiveMinimum": -1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "beta"},
                "shape1": {"type": "number", "exclusiveMinimum": 0},
                "shape2": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "shape1", "shape2"],
            "additionalProperties": False,
        },
    ]
}
POS = {"type": "integer", "minimum": 1}
NONNEG = {"type": "integer", "minimum": 0}
SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
STRATEGY = {"enum": list(STRATEGIES)}
DEGREES = {"type": "array", "items": NONNEG, "minItems": 1}
AXIS = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "minItems": 1}


def _schema(props: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


SCHEMAS = {
    "sample": _schema(
        {"family": FAMILY, "d": POS, "n": NONNEG, "strategy": STRATEGY, "M": POS, "seed": SEED},
        ["family", "d", "n", "strategy", "M"],
    ),
    "recover": _schema(
        {
            "family": FAMILY, "d": POS, "n": NONNEG, "strategy": STRATEGY,
            "data": {"type": "string"}, "epsilon": {"type": "number", "minimum": 0},
        },
        ["family", "d", "n", "strategy", "data"],
    ),
    "transition": _schema(
        {
            "family": FAMILY, "d": POS, "n": NONNEG,
            "strategies": {"type": "array", "items": STRATEGY, "minItems": 1},
            "trials": POS, "resolution": POS, "M_over_N": AXIS, "s_over_M": AXIS,
            "threshold": {"type": "number", "exclusiveMinimum": 0}, "seed": SEED,
        },
        ["family", "d", "n", "strategies"],
    ),
    "gramian": _schema({"family": FAMILY, "degrees": DEGREES}, ["family", "degrees"]),
    "bounds": _schema(
        {
            "family": FAMILY, "degrees": DEGREES, "points_per_degree": {"type": "integer", "minimum": 10},
            "s": POS,
        },
        ["family", "degrees"],
    ),
    "pde": _schema(
        {
            "family": FAMILY, "d": POS, "n": NONNEG,
            "strategies": {"type": "array", "items": STRATEGY, "minItems": 1},
            "M_values": {"type": "array", "items": POS, "minItems": 1},
            "trials": POS, "Q": POS, "P": {"type": "integer", "minimum": 2},
            "sigma": {"type": "number", "minimum": 0}, "tolerance": {"type": "number", "minimum": 0},
            "seed": SEED,
        },
        ["family", "d", "n", "strategies", "M_values"],
    ),
}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def validate(command: str, config) -> None:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as err:
        path = list(err.absolute_path)
        key = ".".join(str(p) for p in path) or None
        if err.validator == "required":
            missing = err.message.split("'")[1]
            key = ".".join([*map(str, path), missing])
        elif err.validator == "additionalProperties":
            key = ".".join([*map(str, path), err.message.split("'")[1]])
        raise ConfigError(err.message, key) from None


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"package": pkg, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _write(out: Path, name: str, csv_text: str, command: str, config: dict, seed, extra: dict | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(csv_text)
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    prov = {
        "command": command,
        "config": config,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": seed,
        "versions": _versions(),
        "output": path.name,
    }
    if extra:
        prov.update(extra)
    (out / f"{name}.provenance.json").write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n")
    return path


def _family_name(desc) -> str:
    if isinstance(desc, str):
        return desc
    return "-".join(f"{v}" for _, v in sorted(desc.items(), key=lambda kv: kv[0] != "kind"))


# --------------------------------------------------------------------------- subcommands


def cmd_sample(cfg, args):
    fam = family_from_descriptor(cfg["family"], n_max=max(cfg["n"], 1))
    batch = draw(cfg["strategy"], [fam] * cfg["d"], cfg["n"], cfg["M"], cfg["seed"])
    header = ",".join(f"z{j + 1}" for j in range(cfg["d"])) + "\n"
    body = "".join(",".join(experiments.fmt(v) for v in row) + "\n" for row in batch.points)
    return "samples", header + body, {}


def _read_data(path: Path, d: int) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    head = lines[0].split(",")
    want = [f"z{j + 1}" for j in range(d)] + ["f"]
    if head != want:
        raise ConfigError(f"data header {head} does not match {want}", "data")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float).reshape(-1, d + 1)
    return rows[:, :d], rows[:, d]


def cmd_recover(cfg, args):
    families, iset = experiments.dictionary(cfg["family"], cfg["d"], cfg["n"])
    data = Path(cfg["data"])
    if not data.is_absolute():
        data = Path(args.config).resolve().parent / data
    Z, f = _read_data(data, cfg["d"])
    design = design_matrix(families, iset, Z)
    A, b = assemble_system(design, weights_for(cfg["strategy"], design, families), f)
    res = bpdn(RecoveryProblem(A, b, cfg["epsilon"]))
    if res.status == "degenerate":
        raise RuntimeError("solver reported a degenerate equiangular system")
    cols = [f"i{j + 1}" for j in range(cfg["d"])]
    text = ",".join(cols + ["coefficient"]) + "\n"
    for idx, c in zip(iset.indices, res.coefficients):
        text += ",".join([*map(str, idx), experiments.fmt(c)]) + "\n"
    extra = {"status": res.status, "steps": res.steps, "residual_norm": res.residual_norm, "N": iset.N, "M": len(f)}
    return "coefficients", text, extra


def cmd_transition(cfg, args):
    k = cfg["resolution"]
    mn = cfg.get("M_over_N") or experiments.cell_centers(k)
    sm = cfg.get("s_over_M") or experiments.cell_centers(k)
    if args.dry_run:
        plan = experiments.transition_plan(cfg["family"], cfg["d"], cfg["n"], mn, sm)
        print("M_over_N,s_over_M,M,s,trials")
        for a, b_, M, s in plan:
            print(f"{experiments.fmt(a)},{experiments.fmt(b_)},{M},{s},{cfg['trials']}")
        return None
    texts, extra = [], {}
    for strat in cfg["strategies"]:
        grid = experiments.transition_study(
            cfg["family"], cfg["d"], cfg["n"], strat, cfg["trials"], cfg["seed"], mn, sm, cfg["threshold"],
            args.threads,
        )
        texts.append((strat, grid.to_csv()))
        extra[strat] = grid.provenance()
    return [(f"transition_{s}", t) for s, t in texts], None, extra


def cmd_gramian(cfg, args):
    fam = family_from_descriptor(cfg["family"], n_max=max(max(cfg["degrees"]), 1))
    text = "n,norm1_inv_sqrt,lambda_min,quad_points\n"
    for n in cfg["degrees"]:
        r = diagnostics.gramian(fam, n)
        text += f"{n},{experiments.fmt(r.norm1_inv_sqrt)},{experiments.fmt(r.lambda_min)},{r.quad_points_used}\n"
    return "gramian", text, {}


def cmd_bounds(cfg, args):
    fam = family_from_descriptor(cfg["family"], n_max=max(max(cfg["degrees"]), 1))
    rep = diagnostics.coherence_scan(fam, cfg["degrees"], cfg["points_per_degree"])
    text = "n,L\n" + "".join(f"{n},{experiments.fmt(L)}\n" for n, L in zip(rep.degrees, rep.L_values))
    extra = {"fitted_exponent": rep.fitted_exponent}
    if "s" in cfg:
        n = max(cfg["degrees"])
        g = diagnostics.gramian(fam, n)
        extra["sample_count_bound"] = diagnostics.sample_count_bound(g.norm1_inv_sqrt, rep.L_values[-1], cfg["s"], n + 1)
    return "coherence", text, extra


def cmd_pde(cfg, args):
    if args.dry_run:
        print("strategy,M,trials")
        for s in cfg["strategies"]:
            for M in cfg["M_values"]:
                print(f"{s},{M},{cfg['trials']}")
        return None
    from .pde_benchmark import CollocationSolver, DiffusionModel, kl_decompose

    families, iset = experiments.dictionary(cfg["family"], cfg["d"], cfg["n"])
    model = DiffusionModel(kl_decompose(d=cfg["d"], sigma=cfg.get("sigma")), CollocationSolver(cfg["P"]))
    val = experiments.Validator(families, iset, model.qoi_batch, cfg["Q"],
                                experiments.derive_seed(cfg["seed"], experiments.VALIDATION_KEY))
    outs, extra = [], {}
    for strat in cfg["strategies"]:
        curve = experiments.pde_study(
            cfg["family"], strat, cfg["d"], cfg["n"], cfg["M_values"], cfg["trials"], cfg["seed"],
            tolerance=cfg.get("tolerance"), validator=val, model=model, threads=args.threads,
        )
        outs.append((f"pde_{strat}", curve.to_csv()))
        extra[strat] = curve.provenance()
    return outs, None, extra


COMMANDS = {
    "sample": cmd_sample,
    "recover": cmd_recover,
    "transition": cmd_transition,
    "gramian": cmd_gramian,
    "bounds": cmd_bounds,
    "pde": cmd_pde,
}
DEFAULTS = {
    "sample": {"seed": 0},
    "recover": {"epsilon": 0.0},
    "transition": {"trials": experiments.DESK_TRIALS, "resolution": experiments.DEFAULT_RESOLUTION,
                   "threshold": 0.01, "seed": 0},
    "bounds": {"points_per_degree": 50},
    "pde": {"trials": experiments.DESK_TRIALS, "Q": 10_000, "P": 128, "seed": 0},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csa-pce", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--full", action="store_true", help=f"use {experiments.FULL_TRIALS} trials")
        sp.add_argument("--dry-run", action="store_true", help="print the planned runs and exit")
    return p


def _fail(kind: str, message: str, key: str | None = None, code: int = 1) -> int:
    err = {"error": kind, "message": message}
    if key is not None:
        err["key"] = key
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config: {err}") from None
        validate(args.command, config)
        cfg = {**DEFAULTS.get(args.command, {}), **config}
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
            cfg["seed"] = args.seed
        if args.full and "trials" in SCHEMAS[args.command]["properties"]:
            cfg["trials"] = experiments.FULL_TRIALS
        if args.threads < 1:
            raise ConfigError("threads must be >= 1", "threads")
        out = COMMANDS[args.command](cfg, args)
        if out is None:
            return 0
        name, text, extra = out
        outputs = [(name, text)] if isinstance(name, str) else name
        for nm, tx in outputs:
            _write(Path(args.out), nm, tx, args.command, cfg, cfg.get("seed"), extra)
    except ConfigError as err:
        return _fail("ConfigError", str(err), err.key, code=2)
    except Exception as err:  # noqa: BLE001 - reported as machine-readable JSON
        return _fail(type(err).__name__, str(err))
    return 0


if __name__ == "__main__":
    sys.exit(main())
