"""Command-line front end.

Every subcommand writes plain data (CSV or JSON) to ``--out``, to
``$WEIGHTED_DRO_OUT/<name>.<ext>`` when that directory variable is set, or
to stdout. Exit codes: 0 success, 1 bad arguments, 2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import concentration as conc
from .dro import AmbiguitySpec, PiecewiseAffineLoss, newsvendor_order, worst_case_dual, worst_case_grid_lp, worst_case_intersection
from .empirical import (
    DiscreteDistribution1D,
    UniformLaw,
    wasserstein_inf,
    wasserstein_p,
    wasserstein_p_point,
    wasserstein_p_uniform,
)
from .lp import LPError
from .sim import DEFAULT_DELTAS, METHODS, DemandModel, SweepConfig, expost_sweep
from .weights import (
    TradeoffInstance,
    concentration_objective,
    effective_sample_size,
    optimal_smoothing_rate,
    optimal_weights,
    optimal_weights_p1,
    optimal_window_size,
    smoothing_weights,
    weight_search,
    weighted_drift,
    window_weights,
)

OUT_ENV = "WEIGHTED_DRO_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output and reproducibility")
    g.add_argument("--seed", type=int, default=0, help="random seed, nonnegative integer (default 0)")
    g.add_argument("--out", type=Path, help=f"output file path (default: ${OUT_ENV}/<name>.<ext> if set, else stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default depends on subcommand)")
    g.add_argument("--preset", choices=("desk", "paper", "fig1", "fig2", "fig3"), help="named configuration")
    return p


def _constants() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("bound constants")
    g.add_argument("--p", type=float, default=1.0, help="Wasserstein order, >= 1 (dimensionless)")
    g.add_argument("--m", type=int, default=1, help="ambient dimension used for the rate exponent q (count)")
    g.add_argument("--q-shift", type=float, default=None, help="shift delta in q = min(p/m, 1/2) - delta (dimensionless; default 1e-3 at the boundary)")
    g.add_argument("--c0", type=float, default=1.0, help="expectation-bound scale (units of W_p^p)")
    g.add_argument("--c1", type=float, default=None, help="exponent rate (units of W_p^-2p; default 2 diam^-2p or 1)")
    g.add_argument("--c2", type=float, default=1.0, help="tail mean offset (units of W_p^p)")
    g.add_argument("--c3", type=float, default=1.0, help="auxiliary constant (dimensionless)")
    g.add_argument("--diam", type=float, default=None, help="support diameter (data units)")
    return p


def _bound_params(a) -> conc.BoundParams:
    return conc.BoundParams(p=a.p, m=a.m, delta=a.q_shift, c0=a.c0, c1=a.c1, c2=a.c2, c3=a.c3, diam=a.diam)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(a, name: str, text: str, ext: str):
    if a.out is not None:
        path = a.out
    elif os.environ.get(OUT_ENV):
        path = Path(os.environ[OUT_ENV]) / f"{name}.{ext}"
    else:
        sys.stdout.write(text)
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _only_presets(a, allowed):
    if a.preset is not None and a.preset not in allowed:
        raise UsageError(f"--preset {a.preset} does not apply to this subcommand (choices: {', '.join(allowed) or 'none'})")


# weights ----------------------------------------------------------------


def _weight_record(kind, w, T, p, r):
    rec = {"kind": kind, "T": T, "p": p, "eps_over_rho": r, "w": [float(v) for v in w]}
    rec["N_eff"] = effective_sample_size(w)
    rec["D_p"] = weighted_drift(w, p)
    if r is not None:
        rec["objective"] = concentration_objective(w, TradeoffInstance(T, p, r))
    return rec


def cmd_weights(a):
    _only_presets(a, ("fig2",))
    fmt = a.format or "json"
    if a.preset == "fig2":
        recs = []
        for p in range(1, 6):
            r = 90.0 * p
            recs.append(_weight_record("optimal", optimal_weights(TradeoffInstance(100, p, r)), 100, float(p), r))
        if fmt == "csv":
            rows = [(t + 1, rec["w"][t], int(rec["p"])) for rec in recs for t in range(100)]
            return _emit(a, "weights-fig2", _csv(("t", "w_t", "p"), rows), "csv")
        return _emit(a, "weights-fig2", _json(recs), "json")
    if a.T is None:
        raise UsageError("--T is required")
    T, p, r = a.T, a.p, a.eps_over_rho
    if a.kind in ("optimal", "p1") and r is None:
        raise UsageError(f"weights {a.kind} needs --eps-over-rho")
    extra = {}
    if a.kind == "optimal":
        res = weight_search(TradeoffInstance(T, p, r))
        w = res.w
        extra = {"support": res.support, "degenerate": res.degenerate}
    elif a.kind == "p1":
        w = optimal_weights_p1(TradeoffInstance(T, 1, r))
        p = 1.0
    elif a.kind == "window":
        s = a.s
        if s is None:
            if r is None:
                raise UsageError("weights window needs --s or --eps-over-rho")
            s = optimal_window_size(TradeoffInstance(T, 1, r))
        w = window_weights(T, s)
        extra = {"s": s}
    else:
        alpha = a.alpha
        if alpha is None:
            if r is None:
                raise UsageError("weights smooth needs --alpha or --eps-over-rho")
            alpha = optimal_smoothing_rate(r)
        w = smoothing_weights(T, alpha)
        extra = {"alpha": alpha}
    rec = _weight_record(a.kind, w, T, p, r)
    rec.update(extra)
    if fmt == "csv":
        return _emit(a, f"weights-{a.kind}", _csv(("t", "w_t", "p"), [(t + 1, rec["w"][t], p) for t in range(T)]), "csv")
    return _emit(a, f"weights-{a.kind}", _json(rec), "json")


# bounds -----------------------------------------------------------------


def _weights_arg(a):
    if a.weights is not None:
        return np.asarray(a.weights)
    if a.T is None:
        raise UsageError("give --weights or --T (uniform weights)")
    return np.full(a.T, 1.0 / a.T)


def cmd_bound(a):
    _only_presets(a, ())
    bp = _bound_params(a)
    rec = {"kind": a.kind, "p": bp.p, "m": bp.m, "q": bp.q, "c0": bp.c0, "c1": bp.rate, "c2": bp.c2, "eps": a.eps}
    if a.kind == "stationary":
        if a.n_eff is None:
            raise UsageError("bound stationary needs --n-eff")
        rec["N_eff"] = a.n_eff
        rec["value"] = conc.stationary_tail_bound(a.n_eff, a.eps, bp)
        rec["expectation_bound"] = conc.expectation_bound(a.n_eff, bp)
    else:
        w = _weights_arg(a)
        rec.update(rho=a.rho, T=int(w.size), N_eff=effective_sample_size(w), D_p=weighted_drift(w, bp.p))
        rec["value"] = conc.drift_tail_bound(w, a.eps, a.rho, bp)
    rec["stderr"] = 0.0
    return _emit(a, f"bound-{a.kind}", _format_record(a, rec), _ext(a))


def _ext(a):
    return a.format or "json"


def _format_record(a, rec) -> str:
    if (a.format or "json") == "csv":
        keys = [k for k, v in rec.items() if not isinstance(v, (list, dict))]
        return _csv(keys, [[rec[k] for k in keys]])
    return _json(rec)


def cmd_radius(a):
    _only_presets(a, ())
    bp = _bound_params(a)
    if a.kind == "weighted":
        res = conc.confidence_radius(a.beta, a.rho, a.T, bp)
        rec = {"kind": "weighted", "beta": a.beta, "rho": a.rho, "T": a.T, "radius": res.radius, "regime": res.regime, "s": res.s, "rho_star": res.threshold}
    else:
        betas = np.full(a.T, a.beta / a.T)
        res = conc.intersection_radii(a.T, a.rho, lambda b: conc.single_sample_radius(b, bp), betas)
        rec = {
            "kind": "intersection",
            "beta": a.beta,
            "rho": a.rho,
            "T": a.T,
            "radii": res.radii.tolist(),
            "min_radius": res.min_radius,
            "eps_single": res.floor,
        }
    return _emit(a, f"radius-{a.kind}", _format_record(a, rec), _ext(a))


def cmd_montecarlo(a):
    _only_presets(a, ())
    spec = conc.DriftSequenceSpec(a.family, a.rho, a.T, n=a.n, theta=a.theta)
    if a.weighting == "uniform":
        w = np.full(a.T, 1.0 / a.T)
    else:
        if a.eps_over_rho is None:
            raise UsageError("--weighting optimal needs --eps-over-rho")
        w = optimal_weights(TradeoffInstance(a.T, a.p, a.eps_over_rho))
    res = conc.monte_carlo_tail(spec, w, a.p, a.eps, a.trials, a.seed)
    rec = {
        "family": a.family,
        "T": a.T,
        "rho": a.rho,
        "p": a.p,
        "eps": a.eps,
        "trials": a.trials,
        "seed": a.seed,
        "N_eff": effective_sample_size(w),
        "D_p": weighted_drift(w, a.p),
        "value": res.frequency,
        "stderr": res.frequency_stderr,
        "mean_Wp": res.mean_wp,
        "mean_Wp_stderr": res.mean_wp_stderr,
        "mean_Wpp": res.mean_wpp,
        "mean_Wpp_stderr": res.mean_wpp_stderr,
    }
    return _emit(a, "montecarlo", _format_record(a, rec), _ext(a))


# distances --------------------------------------------------------------


def _law(text: str) -> DiscreteDistribution1D:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return DiscreteDistribution1D.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read distribution {text[:60]!r}: {exc}")


def cmd_wass(a):
    _only_presets(a, ())
    P = _law(a.P)
    rec = {"p": a.p, "P": P.to_dict()}
    given = [x is not None for x in (a.Q, a.uniform, a.point)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --Q, --uniform, --point")
    if a.Q is not None:
        Q = _law(a.Q)
        rec.update(Q=Q.to_dict(), W_p=wasserstein_p(P, Q, a.p), W_inf=wasserstein_inf(P, Q))
    elif a.uniform is not None:
        U = UniformLaw(*a.uniform)
        rec.update(uniform=[U.lower, U.upper], W_p=wasserstein_p_uniform(P, U, a.p))
    else:
        rec.update(point=a.point, W_p=wasserstein_p_point(P, a.point, a.p))
    return _emit(a, "wass", _format_record(a, rec), _ext(a))


# DRO --------------------------------------------------------------------


def _instance(path: Path):
    try:
        d = json.loads(Path(path).read_text())
        spec = AmbiguitySpec.from_dict(d["spec"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}")
    return d, spec


def cmd_dro(a):
    _only_presets(a, ())
    d, spec = _instance(a.instance)
    G = int(d.get("grid_size", a.grid_size))
    rec = {"kind": spec.kind, "p": spec.p, "grid_size": G}
    if a.kind == "worst-case":
        loss = PiecewiseAffineLoss.from_dict(d["loss"])
        if spec.kind == "weighted-ball":
            rec.update(eps=spec.eps, value=worst_case_dual(loss, spec), grid_value=worst_case_grid_lp(loss, spec, G))
        else:
            value, doublings = worst_case_intersection(loss, spec, G)
            rec.update(value=value, doublings=doublings)
    else:
        method = d.get("method", a.method or ("dual" if spec.kind == "weighted-ball" else "grid"))
        x, value = newsvendor_order(spec, float(d["c_u"]), float(d["c_o"]), method=method, grid_size=G)
        rec.update(method=method, c_u=float(d["c_u"]), c_o=float(d["c_o"]), x_star=x, value=value)
    return _emit(a, f"dro-{a.kind}", _format_record(a, rec), _ext(a))


# experiment -------------------------------------------------------------


def cmd_simulate(a):
    _only_presets(a, ("desk", "paper", "fig3"))
    preset = "paper" if (a.paper_scale or a.preset == "paper") else "desk"
    overrides = {"seed": a.seed, "n_jobs": a.n_jobs}
    if a.simulations is not None:
        overrides["simulations"] = a.simulations
    if a.jumps is not None:
        overrides["jumps"] = a.jumps
    if a.methods is not None:
        overrides["methods"] = tuple(a.methods.split(","))
    overrides["deltas"] = tuple(a.delta) if a.delta is not None else DEFAULT_DELTAS
    cfg = SweepConfig.preset(preset, **overrides)
    res = expost_sweep(DemandModel(n=a.n, T=a.T), cfg)
    fmt = a.format or "csv"
    if fmt == "json":
        return _emit(a, "simulate", res.to_json(), "json")
    path = _emit(a, "simulate", res.to_csv(), "csv")
    if path is not None:
        path.with_suffix(".json").write_text(res.to_json())
    return path


def geometry_grid(obs, p, eps, rho, scale=1.5, means=(-2.0, 4.0), stds=(0.0, 3.0), resolution=201):
    """Membership of uniform laws (by mean and std) in the weighted ball and the intersection.

    The weighted ball is centered at the optimally weighted empirical with
    radius ``eps``; the intersection uses radii ``scale * eps + (T - t + 1) rho``
    around each observation. A zero std is the point mass at the mean.
    """
    obs = np.asarray(obs, dtype=float)
    T = obs.size
    w = optimal_weights(TradeoffInstance(T, p, eps / rho)) if rho > 0 else np.full(T, 1.0 / T)
    center = DiscreteDistribution1D(obs, w)
    radii = scale * eps + np.arange(T, 0, -1) * rho
    rows = []
    for m in np.linspace(means[0], means[1], resolution):
        for s in np.linspace(stds[0], stds[1], resolution):
            if s == 0:
                law = DiscreteDistribution1D.point(m)
                in_w = wasserstein_p(center, law, p) <= eps
                dist = [wasserstein_p_point(law, x, p) for x in obs]
            else:
                law = UniformLaw.from_mean_std(m, s)
                in_w = wasserstein_p_uniform(center, law, p) <= eps
                dist = [wasserstein_p_point(law, x, p) for x in obs]
            in_i = all(d <= r for d, r in zip(dist, radii))
            cell = {(True, True): "both", (True, False): "weighted-only", (False, True): "intersection-only"}.get((in_w, in_i), "neither")
            rows.append((float(m), float(s), int(in_w), int(in_i), cell))
    return w, radii, rows


def cmd_geometry(a):
    _only_presets(a, ("fig1",))
    if a.preset == "fig1":
        obs, p, eps, rho, scale = [1.0, -1.0, 2.0, 3.0], 2.0, 3.0, 1.0 / 3.0, 1.5
    else:
        if a.obs is None:
            raise UsageError("geometry needs --obs or --preset fig1")
        obs, p, eps, rho, scale = a.obs, a.p, a.eps, a.rho, a.scale
    w, radii, rows = geometry_grid(obs, p, eps, rho, scale, tuple(a.mean_range), tuple(a.std_range), a.resolution)
    if (a.format or "csv") == "json":
        rec = {"obs": list(obs), "p": p, "eps": eps, "rho": rho, "w": w.tolist(), "radii": radii.tolist(),
               "cells": [dict(zip(("mean", "std", "weighted", "intersection", "cell"), r)) for r in rows]}
        return _emit(a, "geometry", _json(rec), "json")
    return _emit(a, "geometry", _csv(("mean", "std", "weighted", "intersection", "cell"), rows), "csv")


# parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common, consts = _common(), _constants()
    parser = _Parser(prog="weighted-dro", description="Weighted Wasserstein DRO under distribution drift.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("weights", parents=[common], help="observation weightings", description="Observation weightings (time index t = 1..T, newest last).")
    p.add_argument("kind", choices=("optimal", "p1", "window", "smooth"))
    p.add_argument("--T", type=int, help="history length (count of observations)")
    p.add_argument("--p", type=float, default=1.0, help="Wasserstein order, >= 1 (dimensionless)")
    p.add_argument("--eps-over-rho", type=float, help="radius-to-drift ratio eps/rho (dimensionless, > 0)")
    p.add_argument("--s", type=int, help="window size for 'window' (count; default from the tuning rule)")
    p.add_argument("--alpha", type=float, help="smoothing rate in [0, 1] for 'smooth' (per step; default from the tuning rule)")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("bound", parents=[common, consts], help="concentration tail bounds", description="Tail bound on P[W_p >= eps].")
    p.add_argument("kind", choices=("stationary", "drift"))
    p.add_argument("--n-eff", type=float, help="effective sample size N_eff >= 1 (count)")
    p.add_argument("--eps", type=float, required=True, help="radius eps (data units)")
    p.add_argument("--rho", type=float, default=0.0, help="per-step drift bound rho (data units per step)")
    p.add_argument("--weights", type=_floats, help="comma-separated weights, oldest first (dimensionless, sum 1)")
    p.add_argument("--T", type=int, help="history length for uniform weights (count)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("radius", parents=[common, consts], help="confidence radii", description="Confidence radius of the weighted ball (p = 1) or per-ball intersection radii.")
    p.add_argument("--kind", choices=("weighted", "intersection"), default="weighted", help="which ambiguity set")
    p.add_argument("--beta", type=float, required=True, help="violation probability in (0, 1)")
    p.add_argument("--rho", type=float, required=True, help="per-step drift bound rho (data units per step)")
    p.add_argument("--T", type=int, required=True, help="history length (count)")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("montecarlo", parents=[common], help="Monte-Carlo tail frequency", description="Empirical P[W_p(weighted empirical, P_{T+1}) >= eps].")
    p.add_argument("--family", choices=conc.FAMILIES, default="shifted-binomial", help="drifting family")
    p.add_argument("--T", type=int, required=True, help="history length (count)")
    p.add_argument("--rho", type=float, default=0.0, help="per-step translation (data units per step)")
    p.add_argument("--n", type=int, default=100, help="binomial trials of the base law (count)")
    p.add_argument("--theta", type=float, default=1.0 / 3.0, help="binomial success probability (probability)")
    p.add_argument("--p", type=float, default=1.0, help="Wasserstein order (dimensionless)")
    p.add_argument("--eps", type=float, required=True, help="radius eps (data units)")
    p.add_argument("--trials", type=int, default=1000, help="Monte-Carlo trials (count)")
    p.add_argument("--weighting", choices=("uniform", "optimal"), default="uniform", help="weighting of the observations")
    p.add_argument("--eps-over-rho", type=float, help="ratio for --weighting optimal (dimensionless)")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("wass", parents=[common], help="Wasserstein distances", description="Distances between 1-D laws given as JSON {\"atoms\": [...], \"masses\": [...]} or @file.")
    p.add_argument("--P", required=True, help="discrete law P (JSON or @path)")
    p.add_argument("--Q", help="discrete law Q (JSON or @path)")
    p.add_argument("--uniform", type=float, nargs=2, metavar=("LO", "HI"), help="uniform law on [LO, HI] (data units)")
    p.add_argument("--point", type=float, help="point mass location (data units)")
    p.add_argument("--p", type=float, default=1.0, help="Wasserstein order, >= 1 (dimensionless)")
    p.set_defaults(func=cmd_wass)

    p = sub.add_parser("dro", parents=[common], help="worst-case expectations and orders", description="Instance file: JSON with keys spec, loss (worst-case), c_u, c_o (order), grid_size.")
    p.add_argument("kind", choices=("worst-case", "order"))
    p.add_argument("--instance", type=Path, required=True, help="JSON instance (file path)")
    p.add_argument("--grid-size", type=int, default=2001, help="grid points for LP solvers (count)")
    p.add_argument("--method", choices=("dual", "grid"), help="order solver (default: dual for balls, grid for intersections)")
    p.set_defaults(func=cmd_dro)

    p = sub.add_parser("simulate", parents=[common], help="newsvendor experiment sweep", description="Ex-post sweep over method parameters; CSV cells plus a JSON summary of optima.")
    p.add_argument("--delta", type=float, action="append", help="random-walk half-width delta (probability per step); repeatable")
    p.add_argument("--simulations", type=int, help="number of simulations (count)")
    p.add_argument("--jumps", type=int, help="next-period jumps averaged per simulation (count)")
    p.add_argument("--n", type=int, default=1000, help="consumers, the binomial trials (count)")
    p.add_argument("--T", type=int, default=70, help="history length (count)")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)} (method names)")
    p.add_argument("--paper-scale", action="store_true", help="full-size grids and counts (same as --preset paper)")
    p.add_argument("--n-jobs", type=int, default=1, help="worker processes (count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("geometry", parents=[common], help="ambiguity-set membership of uniform laws", description="Which uniform laws (mean, std) lie in the weighted ball and in the intersection.")
    p.add_argument("--obs", type=_floats, help="comma-separated observations, oldest first (data units)")
    p.add_argument("--p", type=float, default=2.0, help="Wasserstein order (dimensionless)")
    p.add_argument("--eps", type=float, default=3.0, help="weighted-ball radius (data units)")
    p.add_argument("--rho", type=float, default=1.0 / 3.0, help="per-step drift bound (data units per step)")
    p.add_argument("--scale", type=float, default=1.5, help="multiplier on eps for the intersection radii (dimensionless)")
    p.add_argument("--mean-range", type=float, nargs=2, default=(-2.0, 4.0), metavar=("LO", "HI"), help="mean axis (data units)")
    p.add_argument("--std-range", type=float, nargs=2, default=(0.0, 3.0), metavar=("LO", "HI"), help="std axis (data units)")
    p.add_argument("--resolution", type=int, default=201, help="grid points per axis (count)")
    p.set_defaults(func=cmd_geometry)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as exc:  # --help
        return exc.code or 0
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except LPError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 2
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


def main():
    sys.exit(run())
