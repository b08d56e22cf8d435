"""Batch command-line entry point.

Subcommands: zeta, psi, estimate, sweep, mixing, phase, graph-dump.
Configuration comes from an optional JSON file with sections model{},
run{} and output{} (strict keys); command-line flags override config
values one for one.  Exit codes: 0 success, 1 configuration/parameter
error, 2 numeric/resource error.
"""

import argparse
import json
import sys

import numpy as np

from .errors import ConfigError, NumericError, ParameterError, ResourceError
from .exponents import (
    exponent_report,
    phase_scan,
    psi_analytic,
    psi_numeric,
)
from .geometry import Window
from .graph import build_graph, dump_graph
from .kernels import FAMILIES, ModelSpec
from .montecarlo import (
    Estimate,
    estimate_event,
    estimate_long_edge_conditional,
    estimates_json,
    mixing_covariance,
    radius_sweep,
    write_estimates_csv,
    _sample_vertices,
)

MODEL_KEYS = {
    "family",
    "gamma",
    "alpha",
    "profile",
    "delta",
    "p",
    "beta",
    "dimension",
    "vertex_process",
    "beta_env",
    "nu",
    "length_law",
    "axis",
    "tol",
}
RUN_KEYS = {
    "lambda",
    "r",
    "radii",
    "c",
    "kappa",
    "trials",
    "mu",
    "event",
    "estimator",
    "seed",
    "x",
    "grid",
    "r_ladder",
}
OUTPUT_KEYS = {"out", "format"}
EXTRA_MODEL_KEYS = ("beta_env", "nu", "length_law", "axis", "tol")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's default 2
        raise ConfigError(message)


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown_sections = sorted(set(cfg) - {"model", "run", "output"})
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {', '.join(unknown_sections)}")
    for section, allowed in (("model", MODEL_KEYS), ("run", RUN_KEYS), ("output", OUTPUT_KEYS)):
        extra = sorted(set(cfg.get(section, {})) - allowed)
        if extra:
            raise ConfigError(f"unknown keys in config section {section}: {', '.join(extra)}")
    return cfg


def _merged(cfg, args):
    """Flat parameter dict: config values overridden by explicit CLI flags."""
    merged = {}
    for section in ("model", "run", "output"):
        merged.update(cfg.get(section, {}))
    for key, value in vars(args).items():
        if key in ("command", "config"):
            continue
        if value is not None:
            merged[key] = value
    return merged


def _model_from(params) -> ModelSpec:
    delta = params.get("delta")
    profile = params.get("profile")
    if isinstance(delta, str):
        if delta.lower() in ("inf", "infinity", "short"):
            delta, profile = None, "short"
        else:
            delta = float(delta)
    if profile is None:
        profile = "long" if delta is not None else "short"
    extras = {}
    for key in EXTRA_MODEL_KEYS:
        if params.get(key) is not None:
            extras[key] = params[key]
    if "length_law" in extras:
        law = extras["length_law"]
        extras["length_law"] = (str(law[0]), float(law[1]))
    family = params.get("family", "wdrcm-interpolation")
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}")
    return ModelSpec(
        family=family,
        gamma=float(params.get("gamma", 0.0)),
        alpha=float(params.get("alpha", 0.0)),
        profile=profile,
        delta=delta,
        p=float(params.get("p", 1.0)),
        beta=float(params.get("beta", 0.0)),
        dimension=int(params.get("dimension", 2)),
        vertex_process=params.get("vertex_process", "poisson"),
        extras=extras,
    )


def _write_text(out, text):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _emit_estimates(estimates, params):
    fmt = params.get("format", "csv")
    out = params.get("out")
    if fmt == "csv":
        if out is None:
            import io

            buf = io.StringIO()
            _write_csv_buffer(estimates, buf)
            sys.stdout.write(buf.getvalue())
        else:
            write_estimates_csv(estimates, out)
    elif fmt == "json":
        _write_text(out, json.dumps(estimates_json(estimates), sort_keys=True, indent=2) + "\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def _write_csv_buffer(estimates, buf):
    import csv as _csv

    from .montecarlo import CSV_COLUMNS

    writer = _csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for est in estimates:
        writer.writerow(est.row())


def _radii(params):
    r = params.get("radii", params.get("r"))
    if r is None:
        raise ConfigError("sweep needs r or radii")
    if isinstance(r, str):
        return [float(v) for v in r.split(",")]
    if isinstance(r, (list, tuple)):
        return [float(v) for v in r]
    return [float(r)]


def _cmd_zeta(params):
    model = _model_from(params)
    report = exponent_report(
        model.gamma,
        model.alpha,
        model.delta,
        model.profile,
        dimension=model.dimension,
    )
    _write_text(params.get("out"), json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_psi(params):
    model = _model_from(params)
    mu = float(params.get("mu", 0.0))
    ladder = params.get("r_ladder", (1e2, 1e3, 1e4))
    out = {
        "mu": mu,
        "psi_analytic": psi_analytic(
            model.gamma, model.alpha, mu, model.delta, model.profile
        ),
        "psi_numeric": psi_numeric(model, mu, ladder),
        "r_ladder": list(ladder),
        "parameters": {
            "gamma": model.gamma,
            "alpha": model.alpha,
            "delta": model.delta,
            "profile": model.profile,
        },
    }
    _write_text(params.get("out"), json.dumps(out, sort_keys=True, indent=2) + "\n")
    return 0


def _require(params, *keys):
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise ConfigError(f"missing required parameters: {', '.join(missing)}")


def _cmd_estimate(params):
    model = _model_from(params)
    _require(params, "lambda", "r", "trials")
    seed = int(params.get("seed", 0))
    lam = float(params["lambda"])
    r = float(params["r"])
    trials = int(params["trials"])
    c = float(params.get("c", 1.0))
    kappa = params.get("kappa")
    kappa = float(kappa) if kappa is not None else None
    estimator = params.get("estimator", "direct")
    event = params.get("event", "E")
    if estimator == "conditional":
        est = estimate_long_edge_conditional(model, lam, r, trials, seed, kappa or 8.0, c)
    else:
        est = estimate_event(model, lam, event, r, trials, seed, kappa, c)
    _emit_estimates([est], params)
    return 0


def _cmd_sweep(params):
    model = _model_from(params)
    _require(params, "lambda", "trials")
    ests = radius_sweep(
        model,
        float(params["lambda"]),
        params.get("event", "L"),
        _radii(params),
        int(params["trials"]),
        int(params.get("seed", 0)),
        kappa=float(params["kappa"]) if params.get("kappa") is not None else None,
        c=float(params.get("c", 1.0)),
        estimator=params.get("estimator", "direct"),
    )
    _emit_estimates(ests, params)
    return 0


def _cmd_mixing(params):
    model = _model_from(params)
    _require(params, "lambda", "r", "trials")
    res = mixing_covariance(
        model,
        float(params["lambda"]),
        float(params["r"]),
        params.get("x", 10.0),
        int(params["trials"]),
        int(params.get("seed", 0)),
    )
    est = Estimate(
        model,
        "G",
        res.lam,
        res.r,
        float(np.max(np.abs(res.x))),
        res.trials,
        0,
        res.covariance,
        res.stderr,
        "mixing-cov",
        res.seed,
        {"p_first": res.p_first, "p_second": res.p_second},
    )
    _emit_estimates([est], params)
    return 0


def _cmd_phase(params):
    model_delta = params.get("delta")
    profile = "long"
    if isinstance(model_delta, str):
        if model_delta.lower() in ("inf", "infinity", "short"):
            model_delta, profile = None, "short"
        else:
            model_delta = float(model_delta)
    grid = int(params.get("grid", 100))
    scan = phase_scan(model_delta, profile, grid)
    out = params.get("out")
    lines = ["gamma,alpha,delta,zeta,sign"]
    dval = "inf" if model_delta is None else format(model_delta, ".12g")
    for i, g in enumerate(scan.gammas):
        for j, a in enumerate(scan.alphas):
            z = scan.zeta[i, j]
            zs = "nan" if np.isnan(z) else format(z, ".12g")
            lines.append(
                f"{g:.12g},{a:.12g},{dval},{zs},{scan.sign[i, j]}"
            )
    _write_text(out, "\n".join(lines) + "\n")
    # gnuplot-ready companion: blocks of gamma alpha zeta sign-code
    dat_path = (str(out) + ".dat") if out is not None else None
    code = {"negative": -1, "zero": 0, "positive": 1, "invalid": 2}
    dat_lines = []
    for i, g in enumerate(scan.gammas):
        for j, a in enumerate(scan.alphas):
            z = scan.zeta[i, j]
            zs = "nan" if np.isnan(z) else format(z, ".12g")
            dat_lines.append(f"{g:.12g} {a:.12g} {zs} {code[scan.sign[i, j]]}")
        dat_lines.append("")
    for name, poly in scan.boundaries.items():
        dat_lines.append(f"# boundary {name}")
        for gx, ax in poly:
            dat_lines.append(f"{gx:.12g} {ax:.12g}")
        dat_lines.append("")
    if dat_path is not None:
        _write_text(dat_path, "\n".join(dat_lines) + "\n")
    return 0


def _cmd_graph_dump(params):
    model = _model_from(params)
    _require(params, "lambda", "r", "out")
    seed = int(params.get("seed", 0))
    lam = float(params["lambda"])
    r = float(params["r"])
    kind = "lattice-box" if model.vertex_process in ("lattice", "worm") else "continuum-ball"
    window = Window(kind, r, model.dimension)
    vs = _sample_vertices(model, lam, window, seed)
    graph = build_graph(vs, model, seed)
    dump_graph(graph, params["out"])
    return 0


_COMMANDS = {
    "zeta": _cmd_zeta,
    "psi": _cmd_psi,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
    "mixing": _cmd_mixing,
    "phase": _cmd_phase,
    "graph-dump": _cmd_graph_dump,
}


def _build_parser():
    parser = _Parser(prog="percolab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--family")
        p.add_argument("--gamma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--delta")
        p.add_argument("--profile", choices=("long", "short"))
        p.add_argument("--p", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--lambda", dest="lambda_", type=float)
        p.add_argument("--r")
        p.add_argument("--c", type=float)
        p.add_argument("--kappa", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--beta-env", dest="beta_env", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--dimension", type=int)
        p.add_argument("--vertex-process", dest="vertex_process")
        p.add_argument("--event", choices=("E", "G", "L"))
        p.add_argument("--estimator", choices=("direct", "conditional"))
        p.add_argument("--x", type=float)
        p.add_argument("--grid", type=int)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_config(args.config) if args.config else {}
        params = _merged(cfg, args)
        if "lambda_" in params:
            params["lambda"] = params.pop("lambda_")
        if params.get("threads", 1) != 1:
            # trials merge associatively; a single worker is always exact
            params["threads"] = 1
        return _COMMANDS[args.command](params)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
