"""Command-line frontend: ``cfbkit run --config exp.yaml --out results/``.

Each task kind also has a one-off subcommand that builds a single-task
experiment from flags (``--params`` takes inline YAML for the task body).
Exit codes: 0 when every task succeeded, 2 for config errors, 3 when at
least one task failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cfb import build_cfb
from .config import (
    TASK_KINDS,
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_complex,
    parse_kernel,
    parse_symbol,
    validate_config,
)
from .curvature import curvature_closed_form, curvature_rank1, disk_grid, sff_generalized
from .errors import CfbError
from .io import ReportWriter, write_field_csv, write_matrix
from .kernels import eval_diag
from .oracle import direct_intertwiner, fd_dbar_dlog
from .property_h import brute_force_tau, check_lambda_gap, check_norm_limit, check_weight_product
from .shifts import shift_from_kernel, weights_from_kernel
from .similarity import (
    decide_multiplication_family,
    interior_residual,
    j21_intertwiner,
    weak_homogeneity,
)
from .symbols import MobiusMap

log = logging.getLogger("cfbkit")


class Runner:
    """Executes validated tasks against lazily built operators."""

    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self._ops = {}

    def operator(self, name: str):
        if name not in self._ops:
            spec = self.cfg.operators[name]
            kernels = [parse_kernel(k) for k in spec["kernels"]]
            sup = [parse_symbol(s) for s in spec["superdiag"]]
            cof = {tuple(int(x) for x in str(k).split(",")): parse_symbol(s) for k, s in spec["cofactors"].items()}
            self._ops[name] = build_cfb(kernels, sup, cof, int(spec["N"]), verify=bool(spec.get("verify", True)))
        return self._ops[name]

    def grid(self, task):
        return disk_grid(task["grid"]["radius"], task["grid"]["points"])

    def _csv(self, task, grid, values):
        if self.cfg.output["csv"]:
            path = self.out / f"{task['id']}.csv"
            write_field_csv(path, grid, values)
            return str(path.name)
        return None

    # -- task kinds -------------------------------------------------------

    def curvature(self, task):
        g = self.grid(task)
        if "operator" in task:
            k = self.operator(task["operator"]).kernels[int(task.get("block", 1)) - 1]
        else:
            k = parse_kernel(task.get("kernel", {"lambda": 1}))
        fld = curvature_rank1(k, g, method=task.get("method", "auto"))
        res = {"provenance": fld.provenance, "min": float(fld.values.min()), "max": float(fld.values.max())}
        if k.lam is not None:
            ref = curvature_closed_form(k.lam, g).real
            res["max_rel_error_vs_closed_form"] = float(np.max(np.abs(fld.values / ref - 1)))
        res["csv"] = self._csv(task, g, fld.values)
        return res

    def sff(self, task):
        g = self.grid(task)
        T = self.operator(task["operator"])
        f = sff_generalized(T, int(task.get("index", 1)), g)
        res = {"min": float(f.values.min()), "max": float(f.values.max()), "max_truncation_bound": float(np.nanmax(f.truncation_bound))}
        res["csv"] = self._csv(task, g, f.values)
        return res

    def property_h(self, task):
        l1, l2 = (float(x) for x in task.get("lambda", [1, 2]))
        crits = task.get("criteria", ["LambdaGap", "WeightProduct", "NormLimit", "BruteForce"])
        n_max = int(task.get("n_max", 4096))
        N = int(task.get("N", 24))
        k1, k2 = parse_kernel({"lambda": l1, "M": 4 * n_max + 2}), parse_kernel({"lambda": l2, "M": 4 * n_max + 2})
        out = {}
        for c in crits:
            if c == "LambdaGap":
                v = check_lambda_gap(l1, l2)
            elif c == "WeightProduct":
                v = check_weight_product(weights_from_kernel(k1), weights_from_kernel(k2), n_max)
            elif c == "NormLimit":
                v = check_norm_limit(weights_from_kernel(k1), weights_from_kernel(k2), n_max)
            elif c == "BruteForce":
                v = brute_force_tau(shift_from_kernel(k1, N).matrix, shift_from_kernel(k2, N).matrix)[0]
            else:
                raise ConfigError(task["id"], f"unknown criterion {c!r}")
            out[c] = v.to_record()
        return {"verdicts": out}

    def similar(self, task):
        A, B = (self.operator(n) for n in task["operators"])
        v = decide_multiplication_family(A, B)
        res = v.to_record()
        if v.witness is not None and self.cfg.output["matrices"]:
            path = self.out / f"{task['id']}-witness.bin"
            write_matrix(path, v.witness)
            res["witness_file"] = path.name
        res["passed"] = v.residual is None or v.residual <= task["tolerance"]
        return res

    def j21(self, task):
        A, B = (self.operator(n) for n in task["operators"])
        r = j21_intertwiner(A, B, rtol=task["tolerance"])
        res = {"status": r.status.value, "residual": r.residual, "stage_residuals": r.stage_residuals}
        if self.cfg.output["matrices"]:
            path = self.out / f"{task['id']}-K.bin"
            write_matrix(path, r.K)
            res["K_file"] = path.name
        return res

    def homogeneous(self, task):
        T = self.operator(task["operator"])
        if "mobius" in task:
            maps = [MobiusMap(parse_complex(m.get("a", 0)), float(m.get("theta", 0))) for m in task["mobius"]]
        else:
            rng = np.random.default_rng(self.cfg.seed)
            amax = float(task.get("max_abs", 0.6))
            maps = []
            for _ in range(int(task.get("samples", 5))):
                a = amax * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
                maps.append(MobiusMap(a, 2 * np.pi * rng.random()))
        v = weak_homogeneity(T, maps, tol=task["tolerance"])
        res = v.to_record()
        res["mobius"] = [{"a": m.a, "theta": m.theta} for m in maps]
        return res

    def oracle_crosscheck(self, task):
        if "operators" in task:
            A, B = (self.operator(n) for n in task["operators"])
            r = j21_intertwiner(A, B)
            d = direct_intertwiner(A.matrix, B.matrix, "strict-upper", A.N)
            rd = interior_residual(A, B, d.particular)
            diff = abs(r.residual - rd)
            return {"j21_residual": r.residual, "direct_residual": rd, "difference": diff, "passed": diff <= task["tolerance"]}
        k = parse_kernel(task.get("kernel", {"lambda": 1}))
        g = self.grid(task)
        fld = curvature_rank1(k, g)
        ref = -fd_dbar_dlog(lambda w: eval_diag(k, w), g).real
        err = float(np.max(np.abs(fld.values - ref) / np.abs(ref)))
        return {"max_rel_difference": err, "passed": err <= task["tolerance"]}

    def execute(self, task) -> dict:
        fn = getattr(self, task["kind"].replace("-", "_"))
        return fn(task)


def run_experiment(cfg: ExperimentConfig, out: Path, fail_fast: bool = False) -> int:
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    writer = ReportWriter(out / cfg.output["report"])
    runner = Runner(cfg, out)
    failed = 0
    for task in cfg.tasks:
        t0 = time.perf_counter()
        rec = {"task": task["id"], "kind": task["kind"], "inputs": task, "version": __version__, "seed": cfg.seed}
        try:
            rec["result"] = runner.execute(task)
            rec["ok"] = True
        except (CfbError, ValueError, np.linalg.LinAlgError) as exc:
            rec["ok"] = False
            rec["error"] = {"type": type(exc).__name__, "message": str(exc)}
            failed += 1
        rec["timing_s"] = time.perf_counter() - t0
        writer.append(rec)
        log.info("%s: %s", task["id"], "ok" if rec["ok"] else rec["error"]["message"])
        if failed and fail_fast:
            break
    return 3 if failed else 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON experiment file")
    common.add_argument("--out", type=Path, default=Path("cfbkit-out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--truncation", type=int, default=None, help="per-block truncation N")
    common.add_argument("--fail-fast", action="store_true", help="stop at the first failing task")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every task tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cfbkit", description="Numerical experiments on block shift operators.")
    p.add_argument("--version", action="version", version=f"cfbkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run every task of a config file")
    for kind in TASK_KINDS:
        sp = sub.add_parser(kind, parents=[common], help=f"run a single {kind} task")
        sp.add_argument("--params", default="{}", help="task body as inline YAML")
        if kind == "curvature":
            sp.add_argument("--lambda", dest="lam", type=float, help="kernel exponent")
            sp.add_argument("--radius", type=float, help="grid radius")
        if kind == "property-h":
            sp.add_argument("--lambdas", nargs=2, type=float, metavar=("L1", "L2"))
    return p


def _one_off(args) -> dict:
    doc = {}
    if args.config is not None:
        doc = yaml.safe_load(args.config.read_text()) or {}
        doc.pop("tasks", None)
    task = yaml.safe_load(args.params) or {}
    if not isinstance(task, dict):
        raise ConfigError("--params", "must be a mapping")
    task["kind"] = args.command
    if getattr(args, "lam", None) is not None:
        task["kernel"] = {"lambda": args.lam}
    if getattr(args, "radius", None) is not None:
        task.setdefault("grid", {})["radius"] = args.radius
    if getattr(args, "lambdas", None) is not None:
        task["lambda"] = list(args.lambdas)
    doc["tasks"] = [task]
    return doc


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {"seed": args.seed, "truncation": args.truncation, "tolerance_scale": args.tolerance_scale}
    try:
        if args.command == "run":
            if args.config is None:
                raise ConfigError("--config", "required for 'run'")
            cfg = load_config(args.config, **overrides)
        else:
            cfg = validate_config(_one_off(args), **overrides)
    except (ConfigError, yaml.YAMLError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg, args.out, args.fail_fast)


if __name__ == "__main__":
    sys.exit(main())
