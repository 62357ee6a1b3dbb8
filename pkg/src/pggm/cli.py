"""Command line entry points.

    pggm simulate   write ground truths and train/val/test samples
    pggm fit        fit one dataset, or every replication of a simulate dir
    pggm evaluate   score fitted estimates against the stored truths
    pggm benchmark  cross-method sweep over a list of q values

Configuration is a JSON tree; every key can be overridden from the
command line with repeatable --set dotted.path=value flags, and the
common knobs also have dedicated flags. Unknown keys are rejected.

Exit codes: 0 ok, 2 usage/config, 3 generation failure, 4 solver
failure, 5 missing or unreadable inputs, 1 internal error. All numeric
outputs are deterministic for a fixed seed and workers=1; wall-clock
values go to separate files or columns.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import baselines, metrics, modelselect, solver, synth
from .covariance import (Dataset, empirical_covariance, joint_view,
                         marginal_view, read_dataset_bin, read_dataset_csv,
                         read_matrix_bin, write_dataset_bin, write_matrix_bin)
from .linalg import NotPDError
from .solver import BlockPrecision, NonFiniteError, SolverConfig, StepUnderflowError
from .synth import InfeasibleError, RetryExhaustedError, SyntheticSpec


class ConfigError(ValueError):
    pass


class MissingInputError(OSError):
    pass


def _spec_from_config(**kw) -> SyntheticSpec:
    # Bad field values are config errors, not generation failures.
    try:
        return SyntheticSpec(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


DEFAULT_CONFIG = {
    "simulate": {
        "n": 100, "p": 50, "q": 50, "edge_prob": 0.1,
        "target_condition": None, "normalize": True,
        "reps": 50, "seed": 0, "workers": 1,
    },
    "covariance": {"mode": "auto", "center": False},
    "solver": {
        "outer_tol": 1e-6, "max_outer": 100, "inner_tol": 1e-8,
        "max_inner": 200, "ls_shrink": 0.5, "ls_grow": 1.1,
        "min_step": 1e-14, "init_diag_eps": 1e-8, "use_bb": False,
    },
    "grid": {
        "points": 10, "span": 100.0, "method": "validation",
        "family": "element", "lambdas": None, "rhos": None,
    },
    "fit": {
        "estimator": "pggm", "data": None, "val": None, "test": None,
        "sim": None, "p": None, "q": None, "workers": 1,
    },
    "evaluate": {
        "sim": None, "fits": None, "mu": 0.1, "topk": 10,
        "theory": False, "links": False, "labels": None,
    },
    "benchmark": {
        "qs": [50, 100, 200, 500], "reps": 10, "n": 100, "p": 50,
        "edge_prob": 0.1, "target_condition": None, "normalize": True,
        "estimators": ["pggm", "full-ggm", "marginal-ggm", "nslasso"],
        "seed": 0, "workers": 1,
    },
}

ESTIMATORS = ("pggm", "full-ggm", "marginal-ggm", "nslasso", "univariate")


# ---------------------------------------------------------------------------
# config plumbing

def _check_keys(conf, template, prefix=""):
    for key, val in conf.items():
        if key not in template:
            raise ConfigError(f"unknown config key {prefix}{key!r}")
        if isinstance(template[key], dict) and isinstance(val, dict):
            _check_keys(val, template[key], prefix=f"{prefix}{key}.")


def _deep_update(base, extra):
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val


def _apply_set(conf, pairs):
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set needs key.path=value, got {pair!r}")
        path, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = conf
        keys = path.split(".")
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigError(f"unknown config section {key!r} in {path!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"unknown config key {path!r}")
        node[keys[-1]] = value


def load_config(args) -> dict:
    conf = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be an object")
        _check_keys(user, DEFAULT_CONFIG)
        _deep_update(conf, user)
    _apply_set(conf, getattr(args, "set", None))
    # dedicated flags win over file and --set values
    for section, key, attr in [
        ("simulate", "reps", "reps"), ("simulate", "seed", "seed"),
        ("simulate", "workers", "workers"),
        ("benchmark", "reps", "reps"), ("benchmark", "seed", "seed"),
        ("benchmark", "workers", "workers"),
        ("fit", "estimator", "estimator"), ("fit", "data", "data"),
        ("fit", "val", "val"), ("fit", "test", "test"), ("fit", "sim", "sim"),
        ("fit", "p", "p"), ("fit", "q", "q"), ("fit", "workers", "workers"),
        ("grid", "family", "penalty"), ("grid", "method", "select"),
        ("evaluate", "sim", "sim"), ("evaluate", "fits", "fits"),
        ("evaluate", "mu", "mu"), ("evaluate", "topk", "topk"),
        ("evaluate", "theory", "theory"), ("evaluate", "links", "links"),
    ]:
        val = getattr(args, attr, None)
        if val is not None:
            conf[section][key] = val
    _check_keys(conf, DEFAULT_CONFIG)
    if conf["grid"]["method"] not in modelselect.SELECTION_METHODS:
        raise ConfigError(f"grid.method must be one of {modelselect.SELECTION_METHODS}")
    if conf["grid"]["family"] not in solver.PENALTY_FAMILIES:
        raise ConfigError(f"grid.family must be one of {solver.PENALTY_FAMILIES}")
    if conf["covariance"]["mode"] not in ("auto", "explicit", "gram"):
        raise ConfigError("covariance.mode must be auto, explicit, or gram")
    if conf["fit"]["estimator"] not in ESTIMATORS:
        raise ConfigError(f"fit.estimator must be one of {ESTIMATORS}")
    return conf


def solver_config(conf) -> SolverConfig:
    try:
        return SolverConfig(**conf["solver"])
    except TypeError as exc:
        raise ConfigError(f"bad solver config: {exc}") from exc


def _out_dir(args) -> str:
    out = args.out
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return repr(float(v))
    return "" if v is None else str(v)


def _write_csv(path, fieldnames, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([_fmt(row.get(k)) for k in fieldnames])


# ---------------------------------------------------------------------------
# simulate

def _rep_dir(root, rep) -> str:
    return os.path.join(root, f"rep{rep:03d}")


def _simulate_one(root, rep, base_seed, conf_sim):
    spec = _spec_from_config(n=conf_sim["n"], p=conf_sim["p"],
                             q=conf_sim["q"],
                             edge_prob=conf_sim["edge_prob"],
                             target_condition=conf_sim["target_condition"],
                             seed=(base_seed, rep, 0),
                             normalize=bool(conf_sim["normalize"]))
    gt = synth.generate_truth(spec)
    d = _rep_dir(root, rep)
    synth.save_truth(d, gt)
    for stream, name in ((1, "train"), (2, "val"), (3, "test")):
        ds = synth.sample_dataset(gt, conf_sim["n"], (base_seed, rep, stream))
        write_dataset_bin(os.path.join(d, f"{name}.bin"), ds)
    return d


def cmd_simulate(args, conf) -> int:
    out = _out_dir(args)
    sim = conf["simulate"]
    reps = int(sim["reps"])
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    seed = int(sim["seed"])
    workers = int(sim["workers"])
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_simulate_one, out, r, seed, sim) for r in range(reps)]
            for f in futs:
                f.result()
    else:
        for r in range(reps):
            _simulate_one(out, r, seed, sim)
    _write_json(os.path.join(out, "sim.json"),
                {"simulate": sim, "reps": reps, "layout": "repNNN/{truth.json,"
                 "omega_star.bin,train.bin,val.bin,test.bin}"})
    print(f"wrote {reps} replications to {out}")
    return 0


# ---------------------------------------------------------------------------
# fit

def _load_dataset(path, p, q, center) -> Dataset:
    if path.endswith(".csv"):
        if p is None or q is None:
            raise ConfigError("CSV input needs fit.p and fit.q")
        ds = read_dataset_csv(path, int(p), int(q))
    else:
        ds = read_dataset_bin(path)
    return ds.centered() if center else ds


def _grid_weights(cv, conf):
    g = conf["grid"]
    points, span = int(g["points"]), float(g["span"])
    lam_max, rho_max = modelselect.lambda_max_heuristic(cv)
    lambdas = g["lambdas"] or modelselect.log_grid(lam_max, points, span)
    rhos = g["rhos"] or modelselect.log_grid(rho_max, points, span)
    return tuple(float(v) for v in lambdas), tuple(float(v) for v in rhos)


def _fit_one(train: Dataset, val: Dataset | None, test: Dataset | None, conf):
    """Fit one dataset with the configured estimator and selection.

    Returns (files, info, timing): matrices to write, the fit.json
    payload, and wall-clock values kept out of the deterministic files.
    """
    est = conf["fit"]["estimator"]
    if est not in ESTIMATORS:
        raise ConfigError(f"estimator must be one of {ESTIMATORS}")
    method = conf["grid"]["method"]
    family = conf["grid"]["family"]
    mode = conf["covariance"]["mode"]
    cfg = solver_config(conf)
    cv = empirical_covariance(train, mode)
    cv_val = empirical_covariance(val, mode) if val is not None else None
    if method == "validation" and cv_val is None and est != "nslasso":
        raise ConfigError("validation selection needs a validation dataset")
    lambdas, rhos = _grid_weights(cv, conf)

    files: dict[str, np.ndarray] = {}
    info = {"estimator": est, "family": family, "method": method,
            "n": train.n, "p": train.p, "q": train.q}
    t0 = time.perf_counter()
    if est == "pggm":
        grid = modelselect.GridSpec(lambdas=lambdas, rhos=rhos,
                                    method=method, family=family)
        sel = modelselect.select(cv, grid, cfg, cv_val)
        t_select = time.perf_counter() - t0
        t0 = time.perf_counter()
        refit = solver.fit(cv, solver.PenaltySpec(sel.best_lam, sel.best_rho,
                                                  family=family), cfg)
        t_fit = time.perf_counter() - t0
        theta = sel.best_theta
        files["estimate_yy.bin"] = theta.yy
        files["estimate_yx.bin"] = theta.yx
        info.update(lam=sel.best_lam, rho=sel.best_rho,
                    df=modelselect.degrees_of_freedom(theta),
                    objective_trace=sel.best_fit.objective_trace,
                    outer_iters=sel.best_fit.outer_iters,
                    inner_iters=sel.best_fit.inner_iters,
                    termination=sel.best_fit.termination)
        table = sel.table
    elif est in ("full-ggm", "marginal-ggm"):
        marginal = est == "marginal-ggm"
        lam, res, table = modelselect.select_ggm(
            cv, lambdas, cfg, cv_val, method=method, marginal=marginal)
        t_select = time.perf_counter() - t0
        t0 = time.perf_counter()
        view = (marginal_view if marginal else joint_view)(cv)
        solver.fit(view, solver.PenaltySpec(lam, 0.0), cfg)
        t_fit = time.perf_counter() - t0
        omega = res.theta.yy
        p = train.p
        files["estimate_omega.bin"] = omega
        files["estimate_yy.bin"] = omega[:p, :p]
        files["estimate_yx.bin"] = (omega[:p, p:] if not marginal
                                    else np.zeros((p, train.q)))
        info.update(lam=lam, rho=0.0,
                    df=modelselect.degrees_of_freedom(res.theta),
                    objective_trace=res.objective_trace,
                    outer_iters=res.outer_iters, inner_iters=res.inner_iters,
                    termination=res.termination)
    elif est == "nslasso":
        if method != "validation" or val is None:
            raise ConfigError("nslasso selection needs validation data")
        rho, nf, table = modelselect.select_nslasso(train, rhos, val)
        t_select = time.perf_counter() - t0
        t0 = time.perf_counter()
        baselines.fit_nslasso(train, rho)
        t_fit = time.perf_counter() - t0
        files["coefs.bin"] = nf.coefs
        files["support_yy.bin"] = nf.support_yy.astype(np.float64)
        files["support_yx.bin"] = nf.support_yx.astype(np.float64)
        info.update(lam=0.0, rho=rho, df=int(np.count_nonzero(nf.coefs)),
                    objective_trace=[], outer_iters=0, inner_iters=0,
                    termination="")
    else:  # univariate
        if train.p != 1:
            raise ConfigError("univariate estimator needs p = 1")
        table = []
        best = None
        for rho in rhos:
            res = solver.fit(cv, solver.PenaltySpec(0.0, rho, family=family), cfg)
            if method == "validation":
                score = solver.partial_objective(cv_val, res.theta)
            else:
                score = modelselect.bic_score(cv, res.theta)
            table.append({"lam": 0.0, "rho": rho, "score": score, "ok": True,
                          "df": modelselect.degrees_of_freedom(res.theta),
                          "outer_iters": res.outer_iters,
                          "inner_iters": res.inner_iters,
                          "termination": res.termination, "error": ""})
            if best is None or score < best[0] or \
                    (score == best[0] and rho > best[1]):
                best = (score, rho, res)
        t_select = time.perf_counter() - t0
        t0 = time.perf_counter()
        solver.fit(cv, solver.PenaltySpec(0.0, best[1], family=family), cfg)
        t_fit = time.perf_counter() - t0
        res = best[2]
        files["estimate_yy.bin"] = res.theta.yy
        files["estimate_yx.bin"] = res.theta.yx
        info.update(lam=0.0, rho=best[1],
                    df=modelselect.degrees_of_freedom(res.theta),
                    objective_trace=res.objective_trace,
                    outer_iters=res.outer_iters, inner_iters=res.inner_iters,
                    termination=res.termination)
    if test is not None and "estimate_yy.bin" in files:
        cv_test = empirical_covariance(test, mode)
        theta = BlockPrecision(files["estimate_yy.bin"], files["estimate_yx.bin"])
        info["test_objective"] = metrics.test_objective(cv_test, theta)
    timing = {"time_select": t_select, "time_fit": t_fit}
    return files, info, table, timing


SCORE_FIELDS = ["lam", "rho", "score", "ok", "df", "outer_iters",
                "inner_iters", "termination", "error"]


def _write_fit_outputs(outdir, files, info, table, timing):
    os.makedirs(outdir, exist_ok=True)
    for name, mat in files.items():
        write_matrix_bin(os.path.join(outdir, name), np.asarray(mat, dtype=np.float64))
    _write_json(os.path.join(outdir, "fit.json"), info)
    _write_csv(os.path.join(outdir, "score_table.csv"), SCORE_FIELDS, table)
    _write_json(os.path.join(outdir, "timing.json"), timing)


def _fit_rep(task):
    repdir, outdir, conf = task
    center = conf["covariance"]["center"]
    train = _load_dataset(os.path.join(repdir, "train.bin"), None, None, center)
    val_path = os.path.join(repdir, "val.bin")
    val = _load_dataset(val_path, None, None, center) if os.path.exists(val_path) else None
    test_path = os.path.join(repdir, "test.bin")
    test = _load_dataset(test_path, None, None, center) if os.path.exists(test_path) else None
    _write_fit_outputs(outdir, *_fit_one(train, val, test, conf))
    return outdir


def cmd_fit(args, conf) -> int:
    out = _out_dir(args)
    fconf = conf["fit"]
    if fconf["sim"]:
        simdir = fconf["sim"]
        reps = sorted(d for d in os.listdir(simdir)
                      if d.startswith("rep") and
                      os.path.isdir(os.path.join(simdir, d)))
        if not reps:
            raise MissingInputError(f"{simdir}: no replication directories")
        tasks = [(os.path.join(simdir, r), os.path.join(out, r), conf)
                 for r in reps]
        workers = int(fconf["workers"])
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
                for _ in ex.map(_fit_rep, tasks):
                    pass
        else:
            for t in tasks:
                _fit_rep(t)
        print(f"fitted {len(reps)} replications to {out}")
        return 0
    if not fconf["data"]:
        raise ConfigError("fit needs --data FILE or --sim DIR")
    center = conf["covariance"]["center"]
    train = _load_dataset(fconf["data"], fconf["p"], fconf["q"], center)
    val = (_load_dataset(fconf["val"], fconf["p"], fconf["q"], center)
           if fconf["val"] else None)
    test = (_load_dataset(fconf["test"], fconf["p"], fconf["q"], center)
            if fconf["test"] else None)
    _write_fit_outputs(out, *_fit_one(train, val, test, conf))
    print(f"wrote fit to {out}")
    return 0


# ---------------------------------------------------------------------------
# evaluate

METRIC_FIELDS = ["rep", "estimator", "lam", "rho", "df", "frobenius",
                 "spectral", "matrix_l1", "fro_yy", "fro_yx", "fscore",
                 "precision", "recall", "test_objective"]
THEORY_FIELDS = ["gamma_n", "a_inf", "b_inf", "alpha", "rho_minus", "rho_plus",
                 "beta0", "r0", "gamma0", "s_size", "c0", "delta_n",
                 "bound_applicable", "bound_holds"]


def _evaluate_rep(repdir, fitdir, conf):
    gt = synth.load_truth(repdir)
    with open(os.path.join(fitdir, "fit.json"), "r", encoding="utf-8") as fh:
        info = json.load(fh)
    est = info["estimator"]
    row = {"rep": os.path.basename(repdir), "estimator": est,
           "lam": info.get("lam"), "rho": info.get("rho"), "df": info.get("df"),
           "test_objective": info.get("test_objective")}
    if est == "nslasso":
        syy = read_matrix_bin(os.path.join(fitdir, "support_yy.bin")) != 0.0
        syx = read_matrix_bin(os.path.join(fitdir, "support_yx.bin")) != 0.0
        f, prec, rec = metrics.support_fscore(
            (syy, syx), (gt.support_yy, gt.support_yx))
        row.update(fscore=f, precision=prec, recall=rec)
        return row, None
    theta = BlockPrecision(read_matrix_bin(os.path.join(fitdir, "estimate_yy.bin")),
                           read_matrix_bin(os.path.join(fitdir, "estimate_yx.bin")))
    frob, spec_n, ml1 = metrics.norm_losses(theta, gt)
    fyy, fyx = metrics.block_frobenius(theta, gt)
    f, prec, rec = metrics.support_fscore(
        metrics.support_of(theta), (gt.support_yy, gt.support_yx))
    row.update(frobenius=frob, spectral=spec_n, matrix_l1=ml1,
               fro_yy=fyy, fro_yx=fyx, fscore=f, precision=prec, recall=rec)
    links = None
    if conf["evaluate"]["links"]:
        links = metrics.links_above(theta.yy, float(conf["evaluate"]["mu"]))
    if conf["evaluate"]["theory"] and est == "pggm":
        train = read_dataset_bin(os.path.join(repdir, "train.bin"))
        cv = empirical_covariance(train, conf["covariance"]["mode"])
        pen = solver.PenaltySpec(float(info["lam"]), float(info["rho"]))
        diag = metrics.theory_diagnostics(gt, cv, pen)
        row.update(gamma_n=diag.gamma_n, a_inf=diag.a_inf, b_inf=diag.b_inf,
                   alpha=diag.alpha, rho_minus=diag.rho_minus,
                   rho_plus=diag.rho_plus, beta0=diag.beta0, r0=diag.r0,
                   gamma0=diag.gamma0, s_size=diag.s_size, c0=diag.c0,
                   delta_n=diag.delta_n,
                   bound_applicable=bool(diag.delta_n < diag.r0),
                   bound_holds=bool(frob <= diag.delta_n))
    return row, links


def _aggregate(rows, fields):
    agg = {}
    for key in fields:
        vals = [float(r[key]) for r in rows
                if r.get(key) is not None and r.get(key) != ""
                and not isinstance(r.get(key), str)]
        if not vals:
            continue
        arr = np.array(vals)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        agg[key] = {"mean": float(arr.mean()), "se": se, "count": len(arr)}
    return agg


def cmd_evaluate(args, conf) -> int:
    out = _out_dir(args)
    ev = conf["evaluate"]
    simdir, fitsdir = ev["sim"], ev["fits"]
    if not simdir or not fitsdir:
        raise ConfigError("evaluate needs --sim DIR and --fits DIR")
    reps = sorted(d for d in os.listdir(simdir)
                  if d.startswith("rep") and os.path.isdir(os.path.join(simdir, d)))
    if not reps:
        raise MissingInputError(f"{simdir}: no replication directories")
    fields = METRIC_FIELDS + (THEORY_FIELDS if ev["theory"] else [])
    rows = []
    for r in reps:
        fitdir = os.path.join(fitsdir, r)
        if not os.path.isdir(fitdir):
            raise MissingInputError(f"{fitsdir}: missing fits for {r}")
        row, links = _evaluate_rep(os.path.join(simdir, r), fitdir, conf)
        rows.append(row)
        if links is not None:
            _write_csv(os.path.join(out, f"links_{r}.csv"),
                       ["i", "j", "weight"],
                       [{"i": i, "j": j, "weight": w} for i, j, w in links])
    _write_csv(os.path.join(out, "metrics.csv"), fields, rows)
    numeric = [f for f in fields if f not in
               ("rep", "estimator", "bound_applicable", "bound_holds")]
    _write_json(os.path.join(out, "aggregate.json"),
                {"metrics": _aggregate(rows, numeric), "reps": len(rows)})
    print(f"evaluated {len(rows)} replications to {out}")
    return 0


# ---------------------------------------------------------------------------
# benchmark

BENCH_FIELDS = ["q", "rep", "estimator", "lam", "rho", "df", "frobenius",
                "spectral", "matrix_l1", "fscore", "precision", "recall",
                "time_select", "time_fit"]


def _bench_rep(task):
    q, rep, conf = task
    b = conf["benchmark"]
    seed = int(b["seed"])
    spec = _spec_from_config(n=int(b["n"]), p=int(b["p"]), q=int(q),
                             edge_prob=float(b["edge_prob"]),
                             target_condition=b["target_condition"],
                             seed=(seed, int(q), rep, 0),
                             normalize=bool(b["normalize"]))
    gt = synth.generate_truth(spec)
    train = synth.sample_dataset(gt, spec.n, (seed, int(q), rep, 1))
    val = synth.sample_dataset(gt, spec.n, (seed, int(q), rep, 2))
    rows = []
    for est in b["estimators"]:
        conf_est = copy.deepcopy(conf)
        conf_est["fit"]["estimator"] = est
        files, info, _, timing = _fit_one(train, val, None, conf_est)
        row = {"q": int(q), "rep": rep, "estimator": est,
               "lam": info["lam"], "rho": info["rho"], "df": info["df"],
               "time_select": timing["time_select"],
               "time_fit": timing["time_fit"]}
        if est == "nslasso":
            syy = files["support_yy.bin"] != 0.0
            syx = files["support_yx.bin"] != 0.0
            f, prec, rec = metrics.support_fscore(
                (syy, syx), (gt.support_yy, gt.support_yx))
            row.update(fscore=f, precision=prec, recall=rec)
        else:
            theta = BlockPrecision(files["estimate_yy.bin"],
                                   files["estimate_yx.bin"])
            frob, spec_n, ml1 = metrics.norm_losses(theta, gt)
            f, prec, rec = metrics.support_fscore(
                metrics.support_of(theta), (gt.support_yy, gt.support_yx))
            row.update(frobenius=frob, spectral=spec_n, matrix_l1=ml1,
                       fscore=f, precision=prec, recall=rec)
        rows.append(row)
    return rows


def cmd_benchmark(args, conf) -> int:
    out = _out_dir(args)
    b = conf["benchmark"]
    for est in b["estimators"]:
        if est not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {est!r}")
    reps = int(b["reps"])
    tasks = [(q, r, conf) for q in b["qs"] for r in range(reps)]
    workers = int(b["workers"])
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_bench_rep, tasks))
    else:
        results = [_bench_rep(t) for t in tasks]
    rows = [row for batch in results for row in batch]
    _write_csv(os.path.join(out, "results.csv"), BENCH_FIELDS, rows)
    summary = {}
    for q in b["qs"]:
        for est in b["estimators"]:
            sub = [r for r in rows if r["q"] == int(q) and r["estimator"] == est]
            if not sub:
                continue
            entry = _aggregate(sub, ["frobenius", "spectral", "matrix_l1",
                                     "fscore", "precision", "recall"])
            entry["time_fit_median"] = float(np.median(
                [r["time_fit"] for r in sub]))
            entry["time_select_median"] = float(np.median(
                [r["time_select"] for r in sub]))
            summary[f"q={int(q)}/{est}"] = entry
    _write_json(os.path.join(out, "benchmark.json"), summary)
    print(f"benchmark rows: {len(rows)} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pggm",
                                 description="partial GGM estimation toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                        help="override one config key (repeatable)")

    sp = sub.add_parser("simulate", help="write synthetic replications")
    common(sp)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("fit", help="fit a dataset or a simulate directory")
    common(sp)
    sp.add_argument("--data", help="training data (.bin or .csv)")
    sp.add_argument("--val", help="validation data for selection")
    sp.add_argument("--test", help="held-out data for the test objective")
    sp.add_argument("--sim", help="simulate output dir (fits every rep)")
    sp.add_argument("--p", type=int, help="y columns in CSV input")
    sp.add_argument("--q", type=int, help="x columns in CSV input")
    sp.add_argument("--estimator", choices=ESTIMATORS)
    sp.add_argument("--penalty", choices=("element", "column"))
    sp.add_argument("--select", choices=("validation", "bic"))
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("evaluate", help="score fits against stored truths")
    common(sp)
    sp.add_argument("--sim", help="simulate output dir")
    sp.add_argument("--fits", help="fit output dir")
    sp.add_argument("--mu", type=float, help="link weight floor")
    sp.add_argument("--topk", type=int)
    sp.add_argument("--theory", action="store_true", default=None,
                    help="add error-bound diagnostics columns")
    sp.add_argument("--links", action="store_true", default=None,
                    help="write per-rep link lists")

    sp = sub.add_parser("benchmark", help="cross-method sweep over q")
    common(sp)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        conf = load_config(args)
        if args.cmd == "simulate":
            return cmd_simulate(args, conf)
        if args.cmd == "fit":
            return cmd_fit(args, conf)
        if args.cmd == "evaluate":
            return cmd_evaluate(args, conf)
        return cmd_benchmark(args, conf)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, RetryExhaustedError) as exc:
        print(f"generation failure: {exc}", file=sys.stderr)
        return 3
    except (NotPDError, StepUnderflowError, NonFiniteError,
            RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 5
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
