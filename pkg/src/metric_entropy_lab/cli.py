"""Command-line entry point: ``metric-entropy-lab <subcommand> [flags]``.

Every subcommand accepts ``--config file.json`` whose keys are flag names
(dashes or underscores); explicit flags override the file.  Exit status is 0 on
success, 2 on validation errors and 3 on runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    check_same_grid,
    format_dataset,
    load_instance,
    read_dataset,
    read_json,
)
from .entropy import (
    EXACT_THRESHOLD,
    EntropyProfile,
    entropy_profile,
    envelope_at_gamma,
    fit_gamma,
)
from .errors import DomainError, LabError
from .estimators import (
    RegressionTuning,
    nw_from_distances,
    plugin_from_distances,
    select_bandwidth,
)
from .hard_instances import (
    build_classification_family,
    build_regression_family,
    classification_audit,
    regression_audit,
)
from .metric_core import MetricSpec, cross_distances
from .models import SmoothnessSpec, lipschitz_pointset, monotone_pointset
from .risk_lab import RiskReport, RiskRow, admissible_d, rate_fit, risk_report

TOOL = "metric-entropy-lab"
SEED_ENV = "METRIC_ENTROPY_LAB_SEED"
# flags that never enter the config hash (where results go, not what they are)
_UNHASHED = {"out", "plot", "config", "handler", "threads", "eta_given"}

# instance used by ``risk`` when --instance is omitted: two well separated bands of
# monotone curves, g = mean - 1/2
DEFAULT_INSTANCE = {
    "metric": "sup",
    "pool": {"generator": "monotone", "n": 30, "grid": 51, "seed": 0, "bands": [[0.0, 0.15], [0.85, 1.0]]},
    "beta": 1.0,
    "C": 1.0,
    "g": {"kind": "mean", "offset": 0.5},
    "noise": {"family": "gaussian", "scale": 0.5},
    "classification": {"tilt": 2.0, "kappa": 0.0, "w": 0.5},
    "tuning": {"gamma": 1.0, "eta": 0.25, "d": "auto", "window": [0.02, 0.5]},
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"cannot parse comma-separated numbers from {text!r}") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise DomainError(f"expected positive integers, got {text!r}")
    return [int(v) for v in vals]


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise DomainError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _check_eta(eta: float) -> None:
    if not (0.0 < eta < 0.5):
        raise DomainError(f"eta={eta} outside its domain (0, 1/2)")


def _check_beta(beta: float) -> None:
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta={beta} outside its domain (0, 1]")


def _config_hash(args) -> str:
    record = {k: v for k, v in vars(args).items() if k not in _UNHASHED}
    blob = json.dumps(record, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(args) -> dict:
    return {"tool": TOOL, "version": __version__, "seed": args.seed, "config_hash": _config_hash(args)}


def _header(args) -> str:
    m = _meta(args)
    return f"# {TOOL} {m['version']} command={args.command} seed={m['seed']} config={m['config_hash']}\n"


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(args, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_header(args))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _json(args, payload: dict) -> str:
    payload = _finite(dict(payload))
    payload["meta"] = _meta(args)
    return json.dumps(payload, indent=2, default=_json_default, allow_nan=False) + "\n"


def _finite(o):
    """Strict JSON has no infinities: write them as the strings "inf" / "-inf" / "nan"."""
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)) and not math.isfinite(o):
        return "nan" if math.isnan(o) else ("inf" if o > 0 else "-inf")
    return o


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _metric(args) -> MetricSpec:
    return MetricSpec.parse(args.metric)


# ---------------------------------------------------------------- subcommands


def cmd_generate(args) -> None:
    _require(args, "cls", "n")
    if args.grid < 2:
        raise DomainError("--grid needs at least 2 points")
    rng = np.random.default_rng(args.seed)
    grid = np.linspace(0.0, 1.0, args.grid)
    if args.cls == "lipschitz":
        ps = lipschitz_pointset(args.n, args.M, grid, rng)
    else:
        ps = monotone_pointset(args.n, grid, rng)
    _emit(args, _header(args) + format_dataset(ps))


def cmd_entropy(args) -> None:
    _require(args, "input", "radii")
    metric = _metric(args)
    ps = read_dataset(args.input, metric).points
    radii = _floats(args.radii)
    centers = None
    if not args.intrinsic:
        centers = read_dataset(args.centers, metric).points if args.centers else ps
        check_same_grid(ps, centers)
    prof = entropy_profile(
        ps, radii, intrinsic=args.intrinsic, threshold=args.exact_threshold, centers=centers
    )
    rows = [(r, c, m) for r, c, m in zip(prof.radii, prof.counts, prof.modes)]
    _emit(args, _csv(args, ["radius", "count", "mode"], rows))
    if args.plot:
        from .plotting import plot_entropy_profile

        plot_entropy_profile(prof, args.plot)


def _read_profile(path) -> EntropyProfile:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise DomainError(f"{path}: empty profile")
    try:
        radii = tuple(float(r["radius"]) for r in rows)
        counts = tuple(int(r["count"]) for r in rows)
    except (KeyError, ValueError):
        raise DomainError(f"{path}: expected columns radius,count,mode") from None
    modes = tuple(r.get("mode") or "exact" for r in rows)
    return EntropyProfile(radii, counts, modes)


def cmd_gamma_fit(args) -> None:
    _require(args, "profile", "window")
    window = _floats(args.window)
    if len(window) != 2:
        raise DomainError("--window expects lo,hi")
    prof = _read_profile(args.profile)
    env = envelope_at_gamma(prof, window, args.gamma) if args.gamma else fit_gamma(prof, window)
    payload = env.as_dict()
    payload["flags"] = list(env.flags)
    _emit(args, _json(args, payload))


def cmd_regress(args) -> None:
    _require(args, "train", "query", "gamma", "d")
    _check_eta(args.eta)
    metric = _metric(args)
    train = read_dataset(args.train, metric)
    if train.label_name != "y":
        raise DomainError("--train needs a leading 'y' column with responses")
    query = read_dataset(args.query, metric).points
    check_same_grid(train.points, query)
    n = len(train.points)
    tuning = RegressionTuning.for_sample_size(n, args.gamma, args.d, args.eta)
    dist = cross_distances(query, train.points, metric)
    est, b_hat = nw_from_distances(dist, train.labels, tuning.h, tuning.delta_n)
    rows = [(i, float(e), float(b)) for i, (e, b) in enumerate(zip(est, b_hat))]
    _emit(args, _csv(args, ["query_index", "estimate", "b_hat"], rows))


def cmd_classify(args) -> None:
    _require(args, "train", "query")
    metric = _metric(args)
    train = read_dataset(args.train, metric)
    if train.label_name != "label":
        raise DomainError("--train needs a leading 'label' column with 0/1 groups")
    query = read_dataset(args.query, metric).points
    check_same_grid(train.points, query)
    if args.auto_h:
        _require(args, "gamma", "d")
        h = select_bandwidth(len(train.points), args.gamma, args.d)
    else:
        _require(args, "h")
        h = args.h
    if not h > 0:
        raise DomainError("--h must be positive")
    dist = cross_distances(query, train.points, metric)
    labels, p0, p1 = plugin_from_distances(dist, train.labels, h)
    rows = [(i, int(l), float(a), float(b)) for i, (l, a, b) in enumerate(zip(labels, p0, p1))]
    _emit(args, _csv(args, ["query_index", "label", "p_hat_x", "p_hat_y"], rows))


def cmd_lowerbound(args) -> None:
    _require(args, "mode", "input", "delta_n")
    _check_beta(args.beta)
    ps = read_dataset(args.input, _metric(args)).points
    spec = SmoothnessSpec(args.beta, args.C)
    if args.mode == "regression":
        amplitude = args.amplitude
        if amplitude is None:
            probe = build_regression_family(ps, args.delta_n, 1e-12, spec, args.max_points)
            amplitude = 0.5 * probe.d_max
        fam = build_regression_family(ps, args.delta_n, amplitude, spec, args.max_points)
        audit = regression_audit(fam, np.random.default_rng(args.seed))
        family = {
            "mode": "regression",
            "centers": fam.centers.tolist(),
            "m": fam.m,
            "h_n": fam.h_n,
            "delta_n": fam.delta_n,
            "amplitude": fam.d,
            "max_admissible_amplitude": fam.d_max,
            "beta": spec.beta,
            "C": spec.C,
            "design_weights": fam.design.weights.tolist(),
        }
    else:
        _require(args, "kappa")
        fam = build_classification_family(ps, args.kappa, spec, args.delta_n, args.max_points)
        audit = classification_audit(fam)
        family = {
            "mode": "classification",
            "z_minus1": fam.z_minus1,
            "z_0": fam.z_0,
            "packing": fam.packing.tolist(),
            "d_n": fam.d_n,
            "M": fam.M,
            "M0": fam.M0,
            "kappa": fam.kappa,
            "delta_n": fam.delta_n,
            "delta_n_limit": 2.0 ** (-1.0 / spec.beta) * fam.M0,
            "beta": spec.beta,
            "C": spec.C,
            "R_support": fam.R.support.tolist(),
            "R_weights": fam.R.weights.tolist(),
        }
    payload = {"family": family, "audit": audit, "all_pass": all(v["pass"] for v in audit.values())}
    _emit(args, _json(args, payload))


def _instance_tuning(args, spec: dict, instance, task: str):
    tun = dict(spec.get("tuning", {}))
    gamma = args.gamma if args.gamma is not None else tun.get("gamma")
    eta = args.eta if args.eta_given else tun.get("eta", args.eta)
    d = args.d if args.d is not None else tun.get("d")
    if gamma is None or d is None:
        raise DomainError("tuning needs gamma and d (flags or the instance's 'tuning' block)")
    _check_eta(float(eta))
    if d == "auto":
        window = tun.get("window")
        if not window:
            raise DomainError("d='auto' needs tuning.window = [lo, hi]")
        pts = instance.points
        d = admissible_d(pts, float(gamma), float(eta), window, tun.get("fraction", 0.9))
    return float(gamma), float(d), float(eta)


def cmd_risk(args) -> None:
    _require(args, "task", "n_list", "reps")
    if args.instance:
        spec = read_json(args.instance)
        base = Path(args.instance).resolve().parent
    else:
        spec, base = DEFAULT_INSTANCE, None
    instance = load_instance(spec, args.task, base)
    gamma, d, eta = _instance_tuning(args, spec, instance, args.task)
    n_list = _ints(args.n_list)
    if any(n < 2 for n in n_list):
        raise DomainError("every n in --n-list must be at least 2")
    if args.reps < 2:
        raise DomainError("--reps must be at least 2")
    report = risk_report(
        args.task, instance, n_list, args.reps, args.seed, gamma, d, eta, args.x, threads=args.threads
    )
    rows = [(r.n, r.estimate, r.se, r.h, r.delta_n, r.reps) for r in report.rows]
    _emit(args, _csv(args, ["n", "estimate", "se", "h", "delta_n", "reps"], rows))
    if args.plot:
        from .plotting import plot_risk_report

        plot_risk_report(report, args.plot)


def _read_report(path) -> RiskReport:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        rows = [
            RiskRow(int(r["n"]), float(r["estimate"]), float(r["se"]), float(r["h"]), float(r["delta_n"]), int(r["reps"]))
            for r in csv.DictReader(lines)
        ]
    except (KeyError, ValueError):
        raise DomainError(f"{path}: expected columns n,estimate,se,h,delta_n,reps") from None
    return RiskReport(rows, seed=-1)


def cmd_rate(args) -> None:
    _require(args, "report", "beta", "gamma", "kind")
    _check_beta(args.beta)
    fit = rate_fit(_read_report(args.report), args.beta, args.gamma, args.kind)
    payload = {"slope": fit.slope, "se": fit.se, "target": fit.target, "excluded_n": list(fit.excluded)}
    _emit(args, _json(args, payload))


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, metric=True) -> None:
    p.add_argument("--config", help="JSON file with flag values (flags win)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    if metric:
        p.add_argument("--metric", default="sup", help="sup, l1, l2 or lp:<p>")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample random curves into a dataset CSV")
    _common(p, metric=False)
    p.add_argument("--class", dest="cls", choices=["lipschitz", "monotone"])
    p.add_argument("--n", type=int)
    p.add_argument("--grid", type=int, default=51)
    p.add_argument("--M", type=float, default=1.0, help="Lipschitz constant / bound")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("entropy", help="covering-number profile of a dataset")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--radii", help="comma list, decreasing")
    p.add_argument("--intrinsic", action="store_true", help="centres restricted to the data")
    p.add_argument("--centers", help="ambient centre pool CSV (default: the input itself)")
    p.add_argument("--exact-threshold", type=int, default=EXACT_THRESHOLD)
    p.add_argument("--plot", help="write a figure of the profile (png/svg/pdf)")
    p.set_defaults(handler=cmd_entropy)

    p = sub.add_parser("gamma-fit", help="fit the entropy exponent of a profile")
    _common(p, metric=False)
    p.add_argument("--profile")
    p.add_argument("--window", help="lo,hi")
    p.add_argument("--gamma", type=float, default=None, help="fix gamma and fit only the constants")
    p.set_defaults(handler=cmd_gamma_fit)

    p = sub.add_parser("regress", help="truncated Nadaraya-Watson estimates at query curves")
    _common(p)
    p.add_argument("--train")
    p.add_argument("--query")
    p.add_argument("--gamma", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--eta", type=float, default=0.25)
    p.set_defaults(handler=cmd_regress)

    p = sub.add_parser("classify", help="plug-in classifier at query curves")
    _common(p)
    p.add_argument("--train")
    p.add_argument("--query")
    p.add_argument("--h", type=float)
    p.add_argument("--auto-h", action="store_true", help="bandwidth from --gamma/--d and the training size")
    p.add_argument("--gamma", type=float)
    p.add_argument("--d", type=float)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("lowerbound", help="build and audit a hard-instance family")
    _common(p)
    p.add_argument("--mode", choices=["regression", "classification"])
    p.add_argument("--input")
    p.add_argument("--delta-n", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, help="bump amplitude d (regression; default half the maximum)")
    p.add_argument("--max-points", type=int, help="cap on centres / packed points")
    p.set_defaults(handler=cmd_lowerbound)

    p = sub.add_parser("risk", help="Monte Carlo risk over a list of sample sizes")
    _common(p, metric=False)
    p.add_argument("--instance")
    p.add_argument("--task", choices=["regress", "classify", "pointwise"])
    p.add_argument("--n-list")
    p.add_argument("--reps", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--x", type=int, help="pool index for --task pointwise")
    p.add_argument("--plot", help="write a risk-vs-n figure (png/svg/pdf)")
    p.set_defaults(handler=cmd_risk)

    p = sub.add_parser("rate", help="slope of log risk against log log n")
    _common(p, metric=False)
    p.add_argument("--report")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kind", choices=["regression", "classification"])
    p.set_defaults(handler=cmd_rate)
    return parser


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        valid = {a.dest for a in sp._actions} - {"help", "config", "handler"}
        cfg = read_json(args.config)
        norm = {str(k).replace("-", "_"): v for k, v in cfg.items()}
        if "class" in norm:
            norm["cls"] = norm.pop("class")
        unknown = sorted(set(norm) - valid)
        if unknown:
            raise DomainError(f"unknown config key(s): {', '.join(unknown)}")
        sp.set_defaults(**norm)
        args = parser.parse_args(argv)
    if hasattr(args, "eta"):
        args.eta_given = any(a == "--eta" or a.startswith("--eta=") for a in argv) or (
            args.config is not None and "eta" in {k.replace("-", "_") for k in read_json(args.config)}
        )
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise DomainError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    if args.seed < 0:
        raise DomainError("seed must be a nonnegative integer")
    if args.threads < 1:
        raise DomainError("--threads must be at least 1")
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        args.handler(args)
    except LabError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors (code 2) and --help (code 0)
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"{TOOL}: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
