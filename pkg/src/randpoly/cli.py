"""Command-line front end: every run writes a results CSV and a JSON manifest.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 containment of K in L could not be verified.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .calculus import (
    CONSTANT_SEED,
    beta_identity_check,
    concavity_check,
    default_grid,
    expected_facets_estimate,
    integral_I,
    section_constant,
    section_profile,
)
from .distributions import BallModel, BodyModel, make_model
from .errors import (
    ContainmentUnverified,
    DegenerateInput,
    QuadratureNoConvergence,
    RandpolyError,
    RejectionBudgetExceeded,
)
from .montecarlo import (
    facet_prob_estimator,
    inclusion_experiment,
    mc_expected_fvector,
    mc_expected_volume,
    monotonicity_sweep,
)

log = logging.getLogger("randpoly")

CSV_SCHEMA = 1
MANIFEST_SCHEMA = "randpoly-manifest/1"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CONTAINMENT = 0, 2, 3, 4
COMMANDS = ("simulate", "integrate", "concavity", "sweep", "compare", "identity-checks")
STOCHASTIC = {"simulate", "sweep", "compare"}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"--{field}: {message}")
        self.field = field


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def parse_n_range(text: str) -> list[int]:
    """'30' or 'a:b[:step]' (inclusive) to a list of integers."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ConfigError("n", f"expected an integer or a:b[:step], got {text!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) not in (2, 3):
        raise ConfigError("n", f"expected a:b[:step], got {text!r}")
    a, b = nums[:2]
    step = nums[2] if len(nums) == 3 else 1
    if step < 1 or b < a:
        raise ConfigError("n", f"empty or descending range {text!r}")
    return list(range(a, b + 1, step))


def _file_digest(path: Optional[str]) -> Optional[str]:
    if not path:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randpoly",
        description="Expected facet numbers and volumes of random polytopes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p, required=True):
        p.add_argument("--model", required=required,
                       choices=["gaussian", "ball", "polytope", "interval", "cube"])
        p.add_argument("--dim", type=int)
        p.add_argument("--polytope-file")
        p.add_argument("--radius", type=float, default=1.0)

    def common(p, seed_required):
        p.add_argument("--seed", type=int, required=seed_required,
                       default=None if seed_required else CONSTANT_SEED)
        p.add_argument("--out", help="results CSV path (default: <command>.csv)")
        p.add_argument("--tol", type=float, default=1e-10, help="relative quadrature tolerance")
        p.add_argument("--constant-reps", type=int, default=1_000_000,
                       help="Monte Carlo reps for the cached section constant")

    p = sub.add_parser("simulate", help="Monte Carlo estimates of f-vector and volume")
    model_flags(p)
    p.add_argument("--n", required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--sub-reps", type=int, default=1000)
    p.add_argument("--method", choices=["hull", "facet_prob"], default="hull")
    common(p, True)

    p = sub.add_parser("integrate", help="expected facet numbers by quadrature")
    model_flags(p)
    p.add_argument("--n", required=True)
    common(p, False)

    p = sub.add_parser("concavity", help="concavity certificate of the section profile")
    model_flags(p)
    p.add_argument("--grid-points", type=int, default=1001)
    common(p, False)

    p = sub.add_parser("sweep", help="monotonicity of E f_{d-1} in n")
    model_flags(p)
    p.add_argument("--n", required=True)
    p.add_argument("--method", choices=["quadrature", "hull", "facet_prob"], default="quadrature")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--sub-reps", type=int, default=1000)
    common(p, True)

    p = sub.add_parser("compare", help="estimator agreement or set-inclusion volume experiment")
    model_flags(p)
    p.add_argument("--mode", choices=["estimators", "inclusion"], default="estimators")
    p.add_argument("--n", required=True)
    p.add_argument("--reps", type=int, default=5000)
    p.add_argument("--sub-reps", type=int, default=1000)
    p.add_argument("--outer-model", choices=["ball", "polytope", "cube"])
    p.add_argument("--outer-polytope-file")
    p.add_argument("--outer-radius", type=float, default=1.0)
    common(p, True)

    p = sub.add_parser("identity-checks", help="Beta-integral identity residuals")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", required=True, help="largest n, or an explicit a:b[:step] range")
    common(p, False)

    p = sub.add_parser("replay", help="re-run the configuration stored in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write the CSV here instead of the recorded path")
    return parser


@dataclass
class RunConfig:
    command: str
    options: dict

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _model(cfg: RunConfig, prefix: str = "") -> BodyModel:
    kind = cfg.options.get(prefix + "model")
    path = cfg.options.get(prefix + "polytope_file")
    radius = cfg.options.get(prefix + "radius", 1.0)
    dim = cfg.options.get("dim")
    field = (prefix + "model").replace("_", "-")
    if kind in ("gaussian", "ball", "cube") and dim is None:
        raise ConfigError("dim", f"required for --{field} {kind}")
    if kind == "polytope":
        if not path:
            raise ConfigError(field.replace("model", "polytope-file"), "required for polytope models")
        if not Path(path).is_file():
            raise ConfigError(field.replace("model", "polytope-file"), f"no such file {path!r}")
    try:
        return make_model(kind, dim, path, radius)
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from None


def validate(cfg: RunConfig):
    """Check ranges and build the model(s); raises ConfigError naming the field."""
    o = cfg.options
    if cfg.command in STOCHASTIC and o.get("seed") is None:
        raise ConfigError("seed", "required")
    if o.get("seed") is not None and o["seed"] < 0:
        raise ConfigError("seed", "must be non-negative")
    if o.get("tol") is not None and not (0 < o["tol"] < 1):
        raise ConfigError("tol", "must lie in (0, 1)")
    for name in ("reps", "sub_reps"):
        if name in o and o[name] is not None and o[name] < 2:
            raise ConfigError(name.replace("_", "-"), "must be at least 2")
    if o.get("constant_reps") is not None and o["constant_reps"] < 2:
        raise ConfigError("constant-reps", "must be at least 2")
    if cfg.command == "identity-checks":
        if o["dim"] < 1:
            raise ConfigError("dim", "must be positive")
        ns = parse_n_range(o["n"])
        if len(ns) == 1:
            ns = list(range(o["dim"] + 1, ns[0] + 1))
        if not ns or min(ns) < o["dim"] + 1:
            raise ConfigError("n", f"needs n >= d+1 = {o['dim'] + 1}")
        return None, ns
    model = _model(cfg)
    if o.get("dim") is not None and o["dim"] < 1:
        raise ConfigError("dim", "must be positive")
    ns = parse_n_range(o["n"]) if "n" in o else []
    if any(n < model.dim + 1 for n in ns):
        raise ConfigError("n", f"all n must be >= d+1 = {model.dim + 1}")
    needs_symmetric = cfg.command in ("integrate", "concavity") or (
        cfg.command == "sweep" and o["method"] == "quadrature") or (
        cfg.command == "compare" and o["mode"] == "estimators")
    if needs_symmetric and not model.rotation_invariant:
        raise ConfigError("model", f"{cfg.command} needs a rotation-invariant model (gaussian or ball)")
    if cfg.command == "concavity" and (model.dim < 2 or o["grid_points"] < 3):
        raise ConfigError("dim" if model.dim < 2 else "grid-points", "need d >= 2 and at least 3 grid points")
    if cfg.command == "sweep" and any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("n", "must be increasing")
    if cfg.command == "compare" and o["mode"] == "inclusion":
        if not o.get("outer_model"):
            raise ConfigError("outer-model", "required for --mode inclusion")
        if len(ns) != 1:
            raise ConfigError("n", "inclusion experiments take a single n")
        return (model, _model(cfg, "outer_")), ns
    return model, ns


def _constant(cfg, model):
    return section_constant(model, reps=cfg.constant_reps, seed=cfg.seed)


def run_simulate(cfg, model, ns):
    header = ["n", "quantity", "value", "std_error", "reps", "degenerate", "method", "seed"]
    rows = []
    for n in ns:
        if cfg.method == "hull":
            fv = mc_expected_fvector(model, n, cfg.reps, cfg.seed)
            vol = mc_expected_volume(model, n, cfg.reps, cfg.seed)
            for j, est in enumerate(fv):
                if est is not None:
                    rows.append([n, f"f_{j}", est.mean, est.std_error, est.reps, est.degenerate, "hull", cfg.seed])
            rows.append([n, "volume", vol.mean, vol.std_error, vol.reps, vol.degenerate, "hull", cfg.seed])
        else:
            est = facet_prob_estimator(model, n, cfg.reps, cfg.seed, sub_reps=cfg.sub_reps)
            rows.append([n, f"f_{model.dim - 1}", est.mean, est.std_error, est.reps, est.degenerate,
                         "facet_prob", cfg.seed])
    facets = [r for r in rows if r[1] == f"f_{model.dim - 1}"]
    return header, rows, {"facet_means": {str(r[0]): r[2] for r in facets}}


def run_integrate(cfg, model, ns):
    const = _constant(cfg, model)
    header = ["n", "expected_facets", "std_error", "integral_I", "method", "seed"]
    rows = []
    for n in ns:
        est = expected_facets_estimate(model, n, cfg.tol, const)
        rows.append([n, est.mean, est.std_error, integral_I(model, n, cfg.tol, const), "quadrature", cfg.seed])
    return header, rows, {"section_constant": const.value, "section_constant_se": const.std_error}


def run_concavity(cfg, model, ns):
    const = _constant(cfg, model)
    profile = section_profile(model, default_grid(cfg.grid_points), const)
    cert = concavity_check(profile)
    d2 = np.concatenate([[np.nan], cert.second_differences, [np.nan]])
    header = ["s", "L", "second_difference", "method", "seed"]
    rows = [[s, v, None if np.isnan(x) else x, "quadrature", cfg.seed]
            for s, v, x in zip(profile.grid, profile.values, d2)]
    summary = {"passed": cert.passed, "max_second_difference": cert.max_second_difference,
               "argmax_s": cert.argmax_s, "tolerance": cert.tolerance}
    return header, rows, summary


def run_sweep(cfg, model, ns):
    const = _constant(cfg, model) if cfg.method == "quadrature" else None
    report = monotonicity_sweep(model, ns, cfg.method, reps=cfg.reps, seed=cfg.seed,
                                sub_reps=cfg.sub_reps, tol=cfg.tol, const=const)
    header = ["n", "value", "std_error", "diff", "diff_se", "method", "seed"]
    rows = []
    for i, n in enumerate(report.n_values):
        rows.append([
            n, report.values[i],
            report.std_errors[i] if report.std_errors else None,
            report.differences[i - 1] if i else None,
            report.difference_errors[i - 1] if (i and report.difference_errors) else None,
            cfg.method, cfg.seed,
        ])
    summary = {"monotone": report.monotone, "min_difference": report.min_difference}
    if report.concavity is not None:
        summary["concavity_passed"] = report.concavity.passed
    return header, rows, summary


def run_compare(cfg, model, ns):
    if cfg.mode == "inclusion":
        inner, outer = model
        res = inclusion_experiment(inner, outer, ns[0], cfg.reps, cfg.seed)
        header = ["n", "body", "mean", "std_error", "reps", "method", "seed"]
        rows = [[ns[0], name, e.mean, e.std_error, e.reps, "inclusion", cfg.seed]
                for name, e in (("K", res.inner), ("L", res.outer), ("K_minus_L", res.difference))]
        z = res.difference.mean / res.difference.std_error if res.difference.std_error else 0.0
        return header, rows, {"difference": res.difference.mean, "z": z}
    const = _constant(cfg, model)
    header = ["n", "method", "value", "std_error", "z_vs_quadrature", "reps", "seed"]
    rows, worst = [], 0.0
    for n in ns:
        quad = expected_facets_estimate(model, n, cfg.tol, const)
        hull = mc_expected_fvector(model, n, cfg.reps, cfg.seed)[model.dim - 1]
        fp = facet_prob_estimator(model, n, cfg.reps, cfg.seed, sub_reps=cfg.sub_reps)
        rows.append([n, "quadrature", quad.mean, quad.std_error, 0.0, const.reps, cfg.seed])
        for name, est in (("hull", hull), ("facet_prob", fp)):
            z = est.z_distance(quad)
            worst = max(worst, z, est.z_distance(hull if name == "facet_prob" else fp))
            rows.append([n, name, est.mean, est.std_error, z, est.reps, cfg.seed])
    return header, rows, {"max_pairwise_z": worst, "agree_within_3se": worst <= 3.0}


def run_identity(cfg, _model, ns):
    header = ["d", "n", "beta_residual", "method", "seed"]
    d = cfg.dim
    rows = [[d, n, beta_identity_check(n, d), "quadrature", cfg.seed] for n in ns]
    return header, rows, {"max_residual": max(r[2] for r in rows)}


RUNNERS: dict[str, Callable] = {
    "simulate": run_simulate,
    "integrate": run_integrate,
    "concavity": run_concavity,
    "sweep": run_sweep,
    "compare": run_compare,
    "identity-checks": run_identity,
}


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".manifest.json")


def run(cfg: RunConfig, out: Optional[str] = None) -> int:
    """Validate, compute, and write CSV plus manifest; returns the exit code."""
    start = time.perf_counter()
    try:
        model, ns = validate(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"randpoly: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        header, rows, summary = RUNNERS[cfg.command](cfg, model, ns)
    except ContainmentUnverified as exc:
        print(f"randpoly: containment unverified: {exc}", file=sys.stderr)
        return EXIT_CONTAINMENT
    except (QuadratureNoConvergence, DegenerateInput, RejectionBudgetExceeded, RandpolyError) as exc:
        print(f"randpoly: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    csv_path = Path(out or cfg.options.get("out") or f"{cfg.command}.csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(header, rows)
    csv_path.write_text(text, encoding="utf-8")
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "csv_schema": CSV_SCHEMA,
        "version": __version__,
        "command": cfg.command,
        "config": cfg.options,
        "seed": cfg.options.get("seed"),
        "inputs": {k: _file_digest(cfg.options.get(k))
                   for k in ("polytope_file", "outer_polytope_file") if cfg.options.get(k)},
        "csv": str(csv_path),
        "csv_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "rows": len(rows),
        "summary": summary,
        "wall_time": time.perf_counter() - start,
    }
    manifest_path(csv_path).write_text(json.dumps(manifest, indent=2, default=fmt) + "\n", encoding="utf-8")
    print(f"wrote {csv_path} ({len(rows)} rows)")
    for key, value in summary.items():
        if not isinstance(value, dict):
            print(f"  {key}: {fmt(value)}")
    return EXIT_OK


def replay(manifest_file: str, out: Optional[str] = None) -> int:
    data = json.loads(Path(manifest_file).read_text(encoding="utf-8"))
    if data.get("schema") != MANIFEST_SCHEMA:
        print(f"randpoly: unsupported manifest schema {data.get('schema')!r}", file=sys.stderr)
        return EXIT_CONFIG
    for key, digest in data.get("inputs", {}).items():
        if _file_digest(data["config"].get(key)) != digest:
            print(f"randpoly: input file for {key} changed since the manifest was written", file=sys.stderr)
            return EXIT_CONFIG
    return run(RunConfig(data["command"], data["config"]), out or data["csv"])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        return replay(args.manifest, args.out)
    options = {k: v for k, v in vars(args).items() if k != "command"}
    return run(RunConfig(args.command, options))


if __name__ == "__main__":
    sys.exit(main())
