"""
Command line entry points: ``simulate``, ``fit``, ``replicate``, ``report``.

Run as ``python -m spqrds <command> ...``. Settings come from built-in
defaults, then an optional ``--config`` file (flat ``key=value`` lines, or
a manifest written by an earlier run), then explicit flags. Every command
writes a ``manifest.json`` next to its outputs with the resolved settings,
their hash, library versions and output checksums, and nothing outside
``--out``.

Exit codes: 0 success, 1 usage, 2 validation, 3 runtime, 4 partial.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .counterfactual import SCORES, EstimateConfig, fit_estimate
from .metrics import DEFAULT_TAUS, aab_per_replicate, ise, rmse_tau
from .propensity import PropensityConfig, PropensityDraws, known_propensity
from .sampler import SamplerConfig
from .simulations import SimulationDesign, true_marginals

logger = logging.getLogger("spqrds")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3, 4


class ValidationError(Exception):
    """Input data or settings that violate a checkable precondition."""


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# settings

DEFAULTS = {
    "design": 4,
    "J": 0,
    "n": 500,
    "reps": 1,
    "seed": None,
    "rates": "2,4",
    "n_mc": 100000,
    "K": "8,10,12",
    "V": "5,8,10",
    "n_iter": 3000,
    "burnin": 1000,
    "thin": 10,
    "target_accept": 0.8,
    "max_tree_depth": 5,
    "n_pi": 5,
    "ps_iter": 1000,
    "ps_burnin": 500,
    "ps_thin": 100,
    "ps_hidden": 10,
    "grid": 200,
    "taus": ",".join(f"{t:g}" for t in DEFAULT_TAUS),
    "ci_level": 0.95,
    "score": "double",
    "scores": "double",
    "margin": 0.0,
    "propensity": "fit",
    "workers": 0,
    "data": None,
    "out": None,
    "run": None,
}

INT_KEYS = {"design", "J", "n", "reps", "seed", "n_mc", "n_iter", "burnin", "thin",
            "max_tree_depth", "n_pi", "ps_iter", "ps_burnin", "ps_thin", "ps_hidden",
            "grid", "workers"}
FLOAT_KEYS = {"target_accept", "ci_level", "margin"}

COMMAND_KEYS = {
    "simulate": ["design", "J", "n", "reps", "seed", "rates", "n_mc", "out"],
    "fit": ["data", "seed", "K", "V", "n_iter", "burnin", "thin", "target_accept",
            "max_tree_depth", "n_pi", "ps_iter", "ps_burnin", "ps_thin", "ps_hidden",
            "grid", "taus", "ci_level", "score", "margin", "propensity", "out"],
    "replicate": ["design", "J", "n", "reps", "seed", "rates", "n_mc", "K", "V", "n_iter",
                  "burnin", "thin", "target_accept", "max_tree_depth", "n_pi", "ps_iter",
                  "ps_burnin", "ps_thin", "ps_hidden", "grid", "taus", "ci_level",
                  "scores", "margin", "propensity", "workers", "out"],
    "report": ["run", "out"],
}


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in FLOAT_KEYS:
            return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{key} expects a number, got {value!r}") from None
    return str(value)


def read_config_file(path):
    """Parse a ``key=value`` file or a manifest's ``config`` block."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(command, args):
    keys = COMMAND_KEYS[command]
    cfg = {k: DEFAULTS[k] for k in keys}
    if getattr(args, "config", None):
        for k, v in read_config_file(args.config).items():
            if k not in cfg:
                raise UsageError(f"unknown setting {k!r} for {command}")
            cfg[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return {k: _coerce(k, v) for k, v in cfg.items()}


def _floats(text):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def estimate_config(cfg, score, seed):
    sampler = SamplerConfig(n_iter=cfg["n_iter"], n_burnin=cfg["burnin"], thin=cfg["thin"],
                            target_accept=cfg["target_accept"],
                            max_tree_depth=cfg["max_tree_depth"], seed=seed)
    ps = PropensityConfig(hidden=cfg["ps_hidden"], n_iter=cfg["ps_iter"],
                          n_burnin=cfg["ps_burnin"], thin=cfg["ps_thin"], seed=seed)
    return EstimateConfig(
        K_grid=_ints(cfg["K"]), hidden_grid=_ints(cfg["V"]), sampler=sampler, propensity=ps,
        n_pi=cfg["n_pi"], grid_size=cfg["grid"], taus=_floats(cfg["taus"]),
        ci_level=cfg["ci_level"], score=score, margin=cfg["margin"], seed=seed,
    )


def design_from(cfg, seed):
    rates = _floats(cfg["rates"])
    return SimulationDesign(cfg["design"], J=cfg["J"], n=cfg["n"], seed=seed, rates=rates)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def config_hash(cfg):
    # where results land is not a setting; reruns elsewhere share the hash
    settings = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(_jsonable(settings), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(out, command, cfg, files, extra=None):
    manifest = {
        "command": command,
        "seed": cfg.get("seed"),
        "config": cfg,
        "config_hash": config_hash(cfg),
        "versions": {
            "spqrds": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
        },
        "outputs": {name: _sha256(out / name) for name in sorted(files)},
    }
    if extra:
        manifest.update(extra)
    text = json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
    (out / "manifest.json").write_text(text)


def _outdir(cfg):
    if not cfg.get("out"):
        raise UsageError("--out is required")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_seed(cfg):
    if cfg.get("seed") is None:
        raise UsageError("--seed is required")
    if cfg["seed"] < 0:
        raise UsageError("--seed must be nonnegative")
    return cfg["seed"]


# ---------------------------------------------------------------------------
# data ingestion


def load_dataset(path):
    """Read a CSV with columns ``y``, ``t`` and ``x1..xd``.

    Other columns are ignored. Raises ``ValidationError`` with the line
    number of the first offending row.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if "y" not in header or "t" not in header:
            raise ValidationError(f"{path}:1: header must contain 'y' and 't'")
        xcols = sorted((h for h in header if h[:1] == "x" and h[1:].isdigit()),
                       key=lambda h: int(h[1:]))
        expected = [f"x{j + 1}" for j in range(len(xcols))]
        if xcols != expected:
            raise ValidationError(f"{path}:1: covariates must be named x1..xd without gaps")
        iy, it = header.index("y"), header.index("t")
        ix = [header.index(c) for c in xcols]
        ys, ts, xs = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                yv = float(row[iy])
                tv = float(row[it])
                xv = [float(row[i]) for i in ix]
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
            if not all(math.isfinite(v) for v in [yv, tv, *xv]):
                raise ValidationError(f"{path}:{lineno}: non-finite value")
            if tv not in (0.0, 1.0):
                raise ValidationError(f"{path}:{lineno}: treatment must be 0 or 1, got {row[it]}")
            ys.append(yv)
            ts.append(int(tv))
            xs.append(xv)
    if not ys:
        raise ValidationError(f"{path}: no data rows")
    T = np.array(ts)
    if T.min() == T.max():
        raise ValidationError(f"{path}: all subjects are in one treatment arm")
    Y = np.array(ys)
    if Y.min() == Y.max():
        raise ValidationError(f"{path}: outcome is constant")
    X = np.array(xs, dtype=float).reshape(len(ys), len(xcols))
    return Y, T, X


# ---------------------------------------------------------------------------
# commands


def _write_truth(out, truth):
    write_csv(out / "truth.csv", ["grid_y", "f0", "F0", "f1", "F1"],
              zip(truth["grid"], truth["f0"], truth["F0"], truth["f1"], truth["F1"]))
    write_csv(out / "truth_qte.csv", ["tau", "q0", "q1", "qte"],
              zip(truth["taus"], truth["q0"], truth["q1"], truth["qte"]))


def cmd_simulate(cfg):
    seed = _require_seed(cfg)
    out = _outdir(cfg)
    try:
        design = design_from(cfg, seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if design.id == 1 and design.J not in (0, 2):
        raise ValidationError("design 1 uses J = 0 or J = 2")
    if cfg["reps"] < 1:
        raise ValidationError("--reps must be positive")
    files = []
    for r in range(cfg["reps"]):
        name = f"data_r{r:03d}.csv"
        design.generate(r).to_csv(out / name)
        files.append(name)
    truth = true_marginals(design, n_mc=cfg["n_mc"])
    _write_truth(out, truth)
    files += ["truth.csv", "truth_qte.csv"]
    write_manifest(out, "simulate", cfg, files)
    return EXIT_OK


def _write_fit_outputs(out, result, prefix=""):
    s = result.summary
    write_csv(out / f"{prefix}qte.csv", ["tau", "qte_mean", "ci_lo", "ci_hi"], s.qte_table())
    write_csv(out / f"{prefix}density.csv",
              ["grid_y", "f0", "f0_lo", "f0_hi", "f1", "f1_lo", "f1_hi"], s.density_table())
    write_csv(out / f"{prefix}cdf.csv", ["grid_y", "F0", "F1"], zip(s.grid, s.F0, s.F1))
    return [f"{prefix}qte.csv", f"{prefix}density.csv", f"{prefix}cdf.csv"]


def cmd_fit(cfg):
    seed = _require_seed(cfg)
    if not cfg.get("data"):
        raise UsageError("--data is required")
    Y, T, X = load_dataset(cfg["data"])
    out = _outdir(cfg)
    try:
        config = estimate_config(cfg, cfg["score"], seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    ps = None
    if cfg["propensity"] not in ("fit", None):
        ps = PropensityDraws.from_csv(cfg["propensity"])
        if len(ps.probs) != len(Y):
            raise ValidationError("propensity table does not match the dataset")
    result = fit_estimate(Y, T, X, config, propensity=ps)
    files = _write_fit_outputs(out, result)
    if result.propensity is not None:
        result.propensity.to_csv(out / "propensity.csv")
        files.append("propensity.csv")
    d = result.draws
    extra = {"n_pi": d.n_pi, "n_w": d.n_w, "diagnostics": d.diagnostics,
             "note": "no-unmeasured-confounding cannot be checked from data"}
    write_manifest(out, "fit", cfg, files, extra)
    return EXIT_OK


def _replicate_seed(seed, r):
    return int(np.random.SeedSequence([seed, 0xE57, r]).generate_state(1, np.uint64)[0] >> 1)


def run_replicate(task):
    """Fit every requested score variant on replicate ``r``.

    Returns a dict of per-score QTE estimates, intervals and ISEs, or an
    ``error`` entry. Scores share the replicate's propensity draws.
    """
    cfg, design, r, oracle, truth_qte = task
    try:
        ds = design.generate(r)
        seed = _replicate_seed(design.seed, r)
        ps = None
        if cfg["propensity"] == "known":
            ps = known_propensity(ds.pi)
        rows = {}
        for score in cfg["scores"].split(","):
            config = estimate_config(cfg, score, seed)
            res = fit_estimate(ds.Y, ds.T, ds.X, config, propensity=ps)
            if ps is None:
                ps = res.propensity
            s = res.summary
            grid = s.grid
            rows[score] = {
                "qte": s.qte_mean, "lo": s.qte_lo, "hi": s.qte_hi,
                "ise0": ise(s.f0, oracle.pdf(grid, 0), grid),
                "ise1": ise(s.f1, oracle.pdf(grid, 1), grid),
                "sup0": float(np.max(np.abs(s.F0 - oracle.cdf(grid, 0)))),
                "sup1": float(np.max(np.abs(s.F1 - oracle.cdf(grid, 1)))),
                "K": res.draws.diagnostics["K"], "hidden": res.draws.diagnostics["hidden"],
                "divergence": float(np.mean([c["divergence_rate"]
                                             for c in res.draws.diagnostics["chains"]])),
            }
        return {"replicate": r, "scores": rows}
    except Exception as exc:  # reported per replicate, the run continues
        return {"replicate": r, "error": f"{type(exc).__name__}: {exc}"}


def cmd_replicate(cfg):
    seed = _require_seed(cfg)
    out = _outdir(cfg)
    scores = cfg["scores"].split(",")
    if any(s not in SCORES for s in scores):
        raise UsageError(f"--scores must be drawn from {SCORES}")
    if cfg["propensity"] not in ("fit", "known"):
        raise UsageError("--propensity must be 'fit' or 'known' for replicate")
    try:
        design = design_from(cfg, seed)
        estimate_config(cfg, scores[0], seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    taus = np.array(_floats(cfg["taus"]))
    truth = true_marginals(design, n_mc=cfg["n_mc"], taus=taus)
    oracle = truth["oracle"]
    tasks = [(cfg, design, r, oracle, truth["qte"]) for r in range(cfg["reps"])]
    workers = cfg["workers"] or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(run_replicate, tasks))
    else:
        results = [run_replicate(t) for t in tasks]
    results.sort(key=lambda d: d["replicate"])

    per_rep_rows, ise_rows, ci_rows, failures = [], [], [], []
    for res in results:
        if "error" in res:
            failures.append((res["replicate"], res["error"]))
            continue
        for score, v in res["scores"].items():
            for k, tau in enumerate(taus):
                est = v["qte"][k]
                per_rep_rows.append((score, res["replicate"], tau, est, truth["qte"][k],
                                     est - truth["qte"][k]))
                ci_rows.append((score, res["replicate"], tau, v["lo"][k], v["hi"][k]))
            ise_rows.append((score, res["replicate"], v["ise0"], v["ise1"], v["sup0"],
                             v["sup1"], v["K"], v["hidden"], v["divergence"]))
    write_csv(out / "metrics.csv", ["method", "replicate", "tau", "estimate", "truth", "error"],
              per_rep_rows)
    write_csv(out / "intervals.csv", ["method", "replicate", "tau", "ci_lo", "ci_hi"], ci_rows)
    write_csv(out / "ise.csv", ["method", "replicate", "ise0", "ise1", "sup0", "sup1", "K",
                                "hidden", "divergence_rate"], ise_rows)
    write_csv(out / "failures.csv", ["replicate", "error"], failures)
    _write_truth(out, truth)
    files = ["metrics.csv", "intervals.csv", "ise.csv", "failures.csv", "truth.csv",
             "truth_qte.csv"]
    n_ok = len(results) - len(failures)
    files += write_report(out, design_key(design))
    write_manifest(out, "replicate", cfg, files,
                   {"n_success": n_ok, "n_failed": len(failures)})
    if n_ok == 0:
        logger.error("no replicate succeeded")
        return EXIT_RUNTIME
    return EXIT_PARTIAL if failures else EXIT_OK


def design_key(design):
    return f"1-J{design.J}" if design.id == 1 else str(design.id)


def load_reference():
    text = resources.files("spqrds").joinpath("data/reference.json").read_text()
    return json.loads(text)


def aggregate(metrics_rows):
    """Per-method RMSE by level and AAB mean/sd from ``metrics.csv`` rows."""
    methods = sorted({r["method"] for r in metrics_rows}, key=lambda m: SCORES.index(m)
                     if m in SCORES else len(SCORES))
    rmse, aabs = [], []
    for m in methods:
        rows = [r for r in metrics_rows if m == r["method"]]
        taus = sorted({float(r["tau"]) for r in rows})
        reps = sorted({int(r["replicate"]) for r in rows})
        est = np.full((len(reps), len(taus)), np.nan)
        truth = np.empty(len(taus))
        for r in rows:
            i, k = reps.index(int(r["replicate"])), taus.index(float(r["tau"]))
            est[i, k] = float(r["estimate"])
            truth[k] = float(r["truth"])
        for k, tau in enumerate(taus):
            rmse.append((m, tau, rmse_tau(est[:, k], truth[k])))
        per = aab_per_replicate(est, truth, allow_any_levels=True)
        sd = float(np.std(per, ddof=1)) if len(per) > 1 else 0.0
        aabs.append((m, float(np.mean(per)), sd, len(per)))
    return rmse, aabs


def write_report(out, key, dest=None):
    """Aggregate ``metrics.csv`` in ``out`` and compare with the bundled tables."""
    dest = out if dest is None else dest
    with open(out / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    rmse, aabs = aggregate(rows)
    write_csv(dest / "rmse.csv", ["method", "tau", "rmse"], rmse)
    write_csv(dest / "aab.csv", ["method", "aab", "aab_sd", "n_replicates"], aabs)
    ref = load_reference()
    table = ref["designs"].get(key)
    comp = []
    for m, mean, sd, n in aabs:
        name = ref["score_to_method"].get(m, m)
        published = table["aab"].get(name) if table else None
        comp.append((m, name, mean, sd, n, published[0] if published else "",
                     published[1] if published else ""))
    write_csv(dest / "reference.csv",
              ["method", "reference_method", "aab", "aab_sd", "n_replicates", "reference_aab",
               "reference_aab_sd"], comp)
    lines = [f"design {key}", "method        AAB (sd)        reference AAB (sd)   reps"]
    for m, name, mean, sd, n, ra, rs in comp:
        shown = f"{ra:.2f} ({rs:.2f})" if ra != "" else "n/a"
        lines.append(f"{m:<12}  {mean:.3f} ({sd:.3f})   {shown:<19}  {n}")
    (dest / "report.txt").write_text("\n".join(lines) + "\n")
    return ["rmse.csv", "aab.csv", "reference.csv", "report.txt"]


def cmd_report(cfg):
    if not cfg.get("run"):
        raise UsageError("--run is required")
    run = Path(cfg["run"])
    if not (run / "metrics.csv").is_file() or not (run / "manifest.json").is_file():
        raise ValidationError(f"{run} does not hold a replicate run")
    src = json.loads((run / "manifest.json").read_text())["config"]
    design = design_from(src, src["seed"])
    out = Path(cfg["out"]) if cfg.get("out") else run
    out.mkdir(parents=True, exist_ok=True)
    files = write_report(run, design_key(design), out)
    print((out / "report.txt").read_text(), end="")
    if out != run:
        write_manifest(out, "report", cfg, files)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "replicate": cmd_replicate,
            "report": cmd_report}

HELP = {
    "design": "simulation design 1-4", "J": "confounders in design 1 (0 or 2)",
    "n": "sample size", "reps": "number of replicates", "seed": "base seed",
    "rates": "design 4 exponential rates, comma separated", "n_mc": "oracle Monte Carlo size",
    "K": "candidate spline counts", "V": "candidate hidden widths",
    "n_iter": "MCMC iterations", "burnin": "burn-in iterations", "thin": "thinning",
    "target_accept": "NUTS target acceptance", "max_tree_depth": "NUTS maximum tree depth",
    "n_pi": "number of propensity draws", "ps_iter": "propensity MCMC iterations",
    "ps_burnin": "propensity burn-in", "ps_thin": "propensity thinning",
    "ps_hidden": "propensity hidden units", "grid": "evaluation grid size",
    "taus": "quantile levels, comma separated", "ci_level": "credible level",
    "score": "balancing score: double, ps-only or x-only",
    "scores": "comma separated score variants", "margin": "raw-scale normalization margin",
    "propensity": "'fit', 'known' (replicate) or a CSV of draws (fit)",
    "workers": "worker processes (0 = all cores)", "data": "input CSV",
    "out": "output directory", "run": "replicate output directory",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="python -m spqrds", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, help=f"{name} command")
        p.add_argument("--config", help="key=value file or earlier manifest.json")
        for k in keys:
            flag = "--" + k.replace("_", "-")
            p.add_argument(flag, dest=k, default=None, help=HELP.get(k))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
