"""Command line front-end: blowuplab {coeffs,passage,sweep,converge,pdecheck}.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 numerical error (resonance, stiffness, domain).
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import model, pdecheck, report
from .config import load_config
from .errors import BlowupLabError, ConfigError, DomainError, ResonanceError, StiffnessError
from .flow.passage import passage as run_passage
from .manifolds import (
    cm_closed_form,
    cm_closed_form_K1,
    compare,
    convergence_report,
    oracle_K1,
    oracle_orig,
)

log = logging.getLogger("blowuplab")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# ---------------------------------------------------------------- coeffs


def _check_c(c):
    if not c < 0:
        raise ConfigError(f"c = {c}: normal hyperbolicity lost at c >= 0")


def _monomials(center_vars):
    for i, vi in enumerate(center_vars):
        yield (vi,), vi
    for i, vi in enumerate(center_vars):
        for vj in center_vars[i:]:
            yield (vi, vj), (f"{vi}^2" if vi == vj else f"{vi}*{vj}")


def _coeff_rows(exp_cf, exp_or, tag):
    """One row per graph variable and monomial up to degree two, zeros included."""
    rows = []
    scale = max(np.max(np.abs(exp_cf.lin), initial=0.0), np.max(np.abs(exp_cf.quad), initial=0.0), 1e-300)
    for g in exp_cf.graph_vars:
        for names, label in _monomials(exp_cf.center_vars):
            a, b = exp_cf.coef(g, *names), exp_or.coef(g, *names)
            den = max(abs(a), abs(b))
            # numerical zeros on both sides are not compared
            dev = 0.0 if den < 1e-11 * scale else abs(a - b) / den
            rows.append(dict(tag, graph_var=g, monomial=label, closed_form=a, oracle=b, rel_dev=dev))
    return rows


def cmd_coeffs(cfg, args):
    tol = args.tol if args.tol is not None else cfg.float("run", "tol")
    k0s = cfg.ints("coeffs", "k0_list")
    rows = []
    worst = 0.0
    for c in cfg.floats("coeffs", "c_list"):
        _check_c(c)
    for k0 in k0s:
        for mu in cfg.floats("coeffs", "mu_list"):
            for c in cfg.floats("coeffs", "c_list"):
                for a in cfg.floats("coeffs", "a_list"):
                    e1, e2 = cm_closed_form(k0, c, mu, a), oracle_orig(k0, c, mu, a)
                    worst = max(worst, compare(e1, e2))
                    rows += _coeff_rows(e1, e2, dict(chart="ORIG", k0=k0, mu=mu, c=c, a=a, a1_star=None))
            for A in cfg.floats("coeffs", "a1_star_list"):
                e1, e2 = cm_closed_form_K1(k0, A, mu), oracle_K1(k0, A, mu)
                worst = max(worst, compare(e1, e2))
                rows += _coeff_rows(e1, e2, dict(chart="K1", k0=k0, mu=mu, c=None, a=None, a1_star=A))
    cols = ["chart", "k0", "mu", "c", "a", "a1_star", "graph_var", "monomial", "closed_form", "oracle", "rel_dev"]
    report.write_csv(args.out / "coeffs.csv", rows, cols, cfg.hash)
    if not args.no_plots:
        report.plot_coeffs(rows, args.out / "coeffs.png")
    passed = worst < tol
    metrics = {"max_rel_dev": worst, "tol": tol, "n_coefficients": len(rows), "k0_list": k0s}
    return passed, metrics


# ---------------------------------------------------------------- passage and sweep


def _passage_task(job):
    mu, eps, k0, a, sp, rtol, seed = job
    try:
        rep = run_passage(model.ModelParams(mu=mu, a=a, eps=eps, k0=k0), section_params=sp, rtol=rtol,
                                  seed=seed)
    except (StiffnessError, DomainError) as exc:
        return {"mu": mu, "eps": eps, "k0": k0, "outcome": "MAX_TIME", "error": str(exc)}, None
    d = rep.diagnostics
    row = {"mu": mu, "eps": eps, "k0": k0, "outcome": rep.outcome, "exit_v": rep.exit_v, "n_sections": rep.n_sections,
           "drift_max": d["drift_max"], "mode_env_max": d["mode_env_max"],
           "distance_to_target": d.get("distance_to_target"), "error": d.get("reason", "")}
    return row, rep


def _expected(mu):
    return "EXCHANGE" if mu < 1 else "JUMP"


def _row_ok(row, rho):
    if row["outcome"] != _expected(row["mu"]):
        return False
    if row["outcome"] == "EXCHANGE":
        return row["distance_to_target"] is not None and row["distance_to_target"] <= 0.1 * rho
    return True


PASSAGE_COLUMNS = ["mu", "eps", "k0", "outcome", "exit_v", "n_sections", "drift_max", "mode_env_max"]


def _validated_sections(cfg, mus, k0s):
    sp = cfg.section_params()
    for mu in mus:
        for k0 in k0s:
            sp.resolve(mu, k0)
    return sp


def cmd_passage(cfg, args):
    mu, a = cfg.float("passage", "mu"), cfg.float("passage", "a")
    eps, k0 = cfg.float("passage", "eps"), cfg.int("passage", "k0")
    sp = _validated_sections(cfg, [mu], [k0])
    rtol = args.tol if args.tol is not None else cfg.float("run", "rtol")
    row, rep = _passage_task((mu, eps, k0, a, sp, rtol, args.seed))
    report.write_csv(args.out / "passage.csv", [row], PASSAGE_COLUMNS, cfg.hash)
    if rep is not None:
        (args.out / "itinerary.json").write_text(rep.to_json() + "\n")
        if not args.no_plots:
            report.plot_passage(rep, args.out / "passage.png")
    metrics = {k: row.get(k) for k in PASSAGE_COLUMNS + ["distance_to_target", "error"]}
    metrics["expected"] = _expected(mu)
    return _row_ok(row, sp.rho), metrics


def _pool_map(fn, jobs, workers):
    if workers == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))  # map keeps submission order


def cmd_sweep(cfg, args):
    mus = cfg.floats("sweep", "mu_list")
    epss = cfg.floats("sweep", "eps_list")
    k0s = cfg.ints("sweep", "k0_list")
    a = cfg.float("sweep", "a")
    sp = _validated_sections(cfg, mus, k0s)
    rtol = args.tol if args.tol is not None else cfg.float("run", "rtol")
    jobs = [(mu, eps, k0, a, sp, rtol, args.seed) for mu in sorted(mus) for eps in sorted(epss, reverse=True)
            for k0 in sorted(k0s)]
    results = _pool_map(_passage_task, jobs, args.jobs)
    rows = [r for r, _ in results]
    report.write_csv(args.out / "sweep.csv", rows, PASSAGE_COLUMNS, cfg.hash)
    if not args.no_plots:
        report.plot_sweep(rows, args.out / "sweep.png")
    ok = all(_row_ok(r, sp.rho) for r in rows)
    slopes = {}
    for mu in sorted(m for m in mus if m > 1):
        for k0 in sorted(k0s):
            sel = sorted((r["eps"], r["exit_v"]) for r in rows if r["mu"] == mu and r["k0"] == k0
                         and r["outcome"] == "JUMP" and r["exit_v"])
            if len(sel) >= 2:
                e, v = np.array(sel).T
                slopes[f"mu={mu:g},k0={k0}"] = float(np.polyfit(np.log(e), np.log(np.abs(v)), 1)[0])
    metrics = {"dichotomy_ok": ok, "n_runs": len(rows), "exit_slopes": slopes,
               "failures": [f"mu={r['mu']:g} eps={r['eps']:g} k0={r['k0']}: {r['outcome']}"
                            for r in rows if not _row_ok(r, sp.rho)]}
    if slopes:
        vals = list(slopes.values())
        metrics["slope_mean"] = float(np.mean(vals))
        metrics["slope_spread"] = float(np.max(vals) - np.min(vals))
    return ok, metrics


# ---------------------------------------------------------------- converge and pdecheck


def cmd_converge(cfg, args):
    g = lambda k: cfg.float("converge", k)
    _check_c(g("c"))
    rep = convergence_report(cfg.ints("converge", "k0_list"), g("c"), g("mu"), g("a"), kref=cfg.int("converge", "kref"),
                             n=cfg.int("converge", "n_samples"), vmax=g("vmax"), eps_max=g("eps_max"), seed=args.seed)
    rows = rep["rows"]
    report.write_csv(args.out / "converge.csv", rows, ["k0", "sup_distance", "hausdorff"], cfg.hash)
    if not args.no_plots:
        report.plot_converge(rows, args.out / "converge.png")
    d = [r["sup_distance"] for r in rows]
    h = [r["hausdorff"] for r in rows]
    mono = all(x > y for x, y in zip(d, d[1:]))
    mono_h = all(x > y for x, y in zip(h, h[1:]))
    passed = mono and mono_h and rep["decay_exponent"] >= 1.0
    return passed, {"monotone": mono, "hausdorff_monotone": mono_h, "decay_exponent": rep["decay_exponent"]}


def cmd_pdecheck(cfg, args):
    tol = args.tol if args.tol is not None else 1e-10
    mu, a = cfg.float("pdecheck", "mu"), cfg.float("pdecheck", "a")
    defect_rows = []
    for k0 in cfg.ints("pdecheck", "k1_k0_list"):
        p = model.ModelParams(mu=mu, a=a, k0=k0)
        for i in range(cfg.int("pdecheck", "n_points")):
            pt = pdecheck.random_k1_point(k0, seed=args.seed * 1000 + 17 * k0 + i)
            defect_rows.append({"k0": k0, "sample": i, "defect": pdecheck.k1_pde_consistency(p, pt)})
    report.write_csv(args.out / "k1_consistency.csv", defect_rows, ["k0", "sample", "defect"], cfg.hash)

    epss = sorted(cfg.floats("pdecheck", "eps_list"), reverse=True)
    k2k0 = cfg.int("pdecheck", "k2_k0")
    kw = dict(T=cfg.float("pdecheck", "T"), U0=cfg.float("pdecheck", "U0"), V0=cfg.float("pdecheck", "V0"), k0=k2k0)
    rows = pdecheck.k2_limit_compare(a, mu, epss, eta=cfg.float("pdecheck", "eta"), **kw)
    zero = pdecheck.k2_limit_compare(a, mu, epss[-1:], eta=0.0, r2=0.0, **kw)
    cols = ["eps", "k0", "T_snapshot", "l2_distance"]
    report.write_csv(args.out / "k2_limit.csv", rows, cols, cfg.hash)
    if not args.no_plots:
        report.plot_pdecheck(rows, args.out / "k2_limit.png")
    sup = pdecheck.sup_distance_by_eps(rows)
    seq = [sup[e] for e in epss]
    mono = all(x > y for x, y in zip(seq, seq[1:]))
    zero_dist = max(r["l2_distance"] for r in zero)
    max_defect = max(r["defect"] for r in defect_rows)
    passed = max_defect < tol and mono and zero_dist < cfg.float("pdecheck", "zero_tol")
    metrics = {"k1_max_defect": max_defect, "k2_sup_distance": {f"{e:g}": sup[e] for e in epss}, "k2_monotone": mono,
               "k2_constant_data_distance": zero_dist}
    return passed, metrics


COMMANDS = {"coeffs": cmd_coeffs, "passage": cmd_passage, "sweep": cmd_sweep, "converge": cmd_converge,
            "pdecheck": cmd_pdecheck}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI file with run parameters")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: available cores)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed for sampled grids and entry perturbations")
    common.add_argument("--tol", type=float, default=None,
                        help="check tolerance (coeffs, pdecheck) or integrator rtol (passage, sweep)")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="blowuplab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.int("run", "seed")
        if args.jobs is None:
            j = cfg.int("run", "jobs")
            args.jobs = j if j > 0 else (os.cpu_count() or 1)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.set("run", "seed", args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        passed, metrics = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResonanceError, StiffnessError, DomainError, BlowupLabError, FloatingPointError) as exc:
        print(f"numeric error in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report.write_summary(args.out / "summary.json", passed, metrics)
    print(f"{args.command}: {'PASS' if passed else 'FAIL'}")
    return EXIT_PASS if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
