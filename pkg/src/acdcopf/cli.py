"""Command-line workflows: power flow, screening, ranking, optimization
and decision reports.

Subcommands read a declarative JSON config (flags win over config keys),
write CSV + JSON artifacts stamped with the config hash and seed, and
use a fixed exit-code taxonomy: 0 success, 2 validation, 3 solver
divergence, 4 infeasible run, 5 I/O.  Only the output directory and the
worker count may come from the environment (``ACDCOPF_OUTPUT_DIR``,
``ACDCOPF_WORKERS``).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import decide, evo, opfcore, screen
from .netmodel import (CaseError, ControlSpace, Network, bundled_case_path,
                       load_case)
from .run import CorrectiveConfig, OpfProblem

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGED = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5

DEFAULT_CONFIG = {
    "case": None,
    "seed": None,
    "output_dir": "out",
    "optimizer": {
        "population": 100, "iterations": 50, "kappa": 0.05,
        "crossover_rate": 0.9, "mutation_rate": None,
        "eta_crossover": 20.0, "eta_mutation": 20.0, "workers": 1,
    },
    "screening": {
        "samples": 90, "width": 0.005,
        "width_per_kind": {"droop": 0.0005},
        "full_box": False, "folds": 5,
        "grid_size": 30, "lambda_min_factor": 1e-4,
        "holdout_fraction": 0.2, "min_rows_factor": 10,
        "model_path": None, "refresh": "never",
    },
    "corrective": {
        "fraction": 0.15, "max_probes": 30, "tol_feas": 1e-6,
        "include_discrete": True, "per_kind": {}, "per_name": {},
    },
    "decision": {"clusters": 2, "weights": [0.5, 0.5]},
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Config handling


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise CliError(f"config file not found: {path}", EXIT_IO) from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"config file is not valid JSON: {exc}",
                           EXIT_VALIDATION) from exc
        if not isinstance(user, dict):
            raise CliError("config document must be a JSON object",
                           EXIT_VALIDATION)
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}",
                           EXIT_VALIDATION)
        cfg = _merge(cfg, user)
    cfg = _merge(cfg, overrides)
    if os.environ.get("ACDCOPF_OUTPUT_DIR"):
        cfg["output_dir"] = os.environ["ACDCOPF_OUTPUT_DIR"]
    if os.environ.get("ACDCOPF_WORKERS"):
        cfg["optimizer"]["workers"] = int(os.environ["ACDCOPF_WORKERS"])
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the semantic configuration.

    The worker count and output directory are runtime knobs that must not
    change any result, so they stay out of the hash (outputs of the same
    experiment remain byte-identical across them).
    """
    semantic = json.loads(json.dumps(cfg))
    semantic.pop("output_dir", None)
    semantic.get("optimizer", {}).pop("workers", None)
    return hashlib.sha256(
        json.dumps(semantic, sort_keys=True).encode()).hexdigest()[:16]


def require_seed(cfg: dict) -> int:
    seed = cfg.get("seed")
    if seed is None:
        raise CliError("a seed is mandatory (config 'seed' or --seed)",
                       EXIT_VALIDATION)
    return int(seed)


def resolve_case(cfg: dict) -> Network:
    case = cfg.get("case")
    if not case:
        raise CliError("no case file given (config 'case' or --case)",
                       EXIT_VALIDATION)
    path = Path(case)
    if str(case).startswith("bundled:"):
        path = bundled_case_path(str(case).split(":", 1)[1])
    try:
        return load_case(path)
    except CaseError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from exc


def load_control_overrides(space: ControlSpace,
                           path: str | None) -> np.ndarray:
    u = space.default_vector()
    if not path:
        return u
    try:
        overrides = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise CliError(f"controls file not found: {path}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"controls file is not valid JSON: {exc}",
                       EXIT_VALIDATION) from exc
    for name, value in overrides.items():
        if name not in space.index:
            raise CliError(f"unknown control component {name!r}",
                           EXIT_VALIDATION)
        u[space.index[name]] = float(value)
    return space.snap(u)[0]


# ---------------------------------------------------------------------------
# Output helpers


def _ensure_outdir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}",
                       EXIT_IO) from exc
    return out


def write_csv(path: Path, header: list[str], rows: list[list],
              stamp: dict) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# config_hash={stamp['config_hash']} seed={stamp['seed']}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: Path, payload: dict, stamp: dict) -> None:
    doc = {"metadata": stamp}
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1,
                               default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _fmt(value: float, digits: int = 6) -> str:
    return f"{value:.{digits}f}"


# ---------------------------------------------------------------------------
# powerflow


def cmd_powerflow(args) -> int:
    cfg = load_config(args.config, {"case": args.case} if args.case else {})
    cfg.setdefault("seed", 0)
    if cfg.get("seed") is None:
        cfg["seed"] = 0
    stamp = {"config_hash": config_hash(cfg), "seed": cfg["seed"]}
    net = resolve_case(cfg)
    space = ControlSpace(net)
    u = load_control_overrides(space, args.controls)
    out = _ensure_outdir(cfg)

    trace: list | None = [] if args.debug_trace else None
    result = opfcore.evaluate(net, space, u, trace=trace)
    state = result.state
    if trace is not None and state.converged:
        rows = [[o, a, d, r] for o, a, d, r in trace]
        write_csv(out / "powerflow_trace.csv",
                  ["outer", "ac_iterations", "dc_iterations", "residual"],
                  rows, stamp)

    if not state.converged:
        print(f"power flow did not converge (stage: "
              f"{state.failure_stage or 'unknown'})", file=sys.stderr)
        return EXIT_DIVERGED

    gen_by_bus = {g.bus: i for i, g in enumerate(net.generators)}
    bus_rows = []
    for i, bus in enumerate(net.buses):
        gi = gen_by_bus.get(bus.id)
        bus_rows.append([
            bus.id, bus.kind, _fmt(state.ac.vm[i]), _fmt(state.ac.va[i]),
            _fmt(state.gen_p[gi]) if gi is not None else "",
            _fmt(state.gen_q[gi]) if gi is not None else "",
            _fmt(bus.p_d), _fmt(bus.q_d)])
    write_csv(out / "powerflow_buses.csv",
              ["bus", "kind", "u", "delta", "p_g", "q_g", "p_d", "q_d"],
              bus_rows, stamp)

    br_rows = [[br.label, _fmt(p), _fmt(q), _fmt(br.p_max)]
               for br, p, q in zip(net.branches, state.ac.p_branch,
                                   state.ac.q_branch)]
    write_csv(out / "powerflow_branches.csv",
              ["branch", "p_from", "q_from", "p_max"], br_rows, stamp)

    conv_rows = []
    for conv, cs in zip(net.converters, state.converters):
        u_dc = state.dc.u[net.dc_bus_index[conv.dc_bus]]
        conv_rows.append([cs.name, _fmt(cs.p_s), _fmt(cs.q_s), _fmt(u_dc),
                          _fmt(conv.droop), _fmt(cs.p_dc), _fmt(cs.p_loss),
                          _fmt(cs.residual, 10)])
    write_csv(out / "powerflow_converters.csv",
              ["converter", "p_s", "q_s", "u_dc", "droop", "p_dc", "p_loss",
               "coupling_residual"], conv_rows, stamp)

    if net.dc_buses:
        dc_rows = [[b.id, _fmt(state.dc.u[i]), _fmt(state.dc.i_inj[i]),
                    _fmt(state.dc.p_inj[i])]
                   for i, b in enumerate(net.dc_buses)]
        write_csv(out / "powerflow_dc.csv",
                  ["dc_bus", "u_dc", "i_dc", "p_dc"], dc_rows, stamp)

    write_json(out / "powerflow.json", {
        "converged": state.converged,
        "outer_iterations": state.outer_iterations,
        "objectives": {"generation_cost": result.objectives[0],
                       "voltage_deviation": result.objectives[1]},
        "total_violation": result.report.total_violation,
        "violations": result.report.violations(),
    }, stamp)
    print(f"converged in {state.outer_iterations} coupling iteration(s); "
          f"f1={result.objectives[0]:.2f} $/h, "
          f"f2={result.objectives[1]:.6f} p.u.^2")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train-screen


def train_screening_model(net: Network, cfg: dict, seed: int, workers: int):
    """Build training data, fit with cross-validated penalty, validate on
    held-out control samples.  Returns (model, validation dict, table rows).
    """
    scr = cfg["screening"]
    space = ControlSpace(net)
    n_samples = int(scr["samples"])
    ac_outages = [k for k in net.contingencies if k.kind == "ac_line"]
    min_rows = scr["min_rows_factor"] * (len(net.contingencies) + len(space))
    if n_samples * max(1, len(ac_outages)) < min_rows:
        raise CliError(
            f"insufficient samples: {n_samples} control samples give "
            f"{n_samples * len(ac_outages)} rows, need >= {min_rows}",
            EXIT_VALIDATION)

    sampler = screen.SamplerConfig(
        width=float(scr["width"]),
        per_kind={k: float(v) for k, v in scr["width_per_kind"].items()},
        full_box=bool(scr["full_box"]), seed=seed)
    train = screen.build_training_set(net, sampler, n_samples)

    rng = np.random.default_rng(seed + 1)
    n_hold = max(1, int(round(scr["holdout_fraction"] * n_samples)))
    holdout = set(rng.choice(n_samples, size=n_hold, replace=False).tolist())
    train_rows = np.array([s not in holdout for s in train.row_sample])

    fit_set = screen.TrainingSet(
        x=train.x[train_rows], y=train.y[train_rows],
        feature_names=train.feature_names,
        row_outage=[o for o, keep in zip(train.row_outage, train_rows) if keep],
        row_sample=train.row_sample[train_rows],
        controls=train.controls, flagged=train.flagged[train_rows])
    model = screen.fit_screening_model(
        net, fit_set, folds=int(scr["folds"]), grid_size=int(scr["grid_size"]),
        lam_min_factor=float(scr["lambda_min_factor"]), seed=seed)

    # held-out validation: relative errors and per-sample rank correlation
    errors: list[float] = []
    rhos: list[float] = []
    hold_rows = ~train_rows
    for si in sorted(holdout):
        sel = hold_rows & (train.row_sample == si)
        preds, exacts = [], []
        for ri in np.flatnonzero(sel):
            pred = model.predict_row(train.x[ri])
            exact = train.y[ri]
            flagged = train.flagged[ri]
            preds.append(pred)
            exacts.append(exact)
            if not flagged and exact >= 0.05:
                errors.append(screen.prediction_error(pred, exact))
        exacts = np.array(exacts)
        preds = np.array(preds)
        keep = exacts >= 0.05
        if keep.sum() >= 3:
            rho = spearmanr(preds[keep], exacts[keep]).statistic
            rhos.append(float(rho))
    validation = {
        "holdout_samples": sorted(holdout),
        "n_holdout_rows": int(hold_rows.sum()),
        "n_errors_scored": len(errors),
        "max_abs_error_percent": max((abs(e) for e in errors), default=0.0),
        "mean_abs_error_percent": (float(np.mean([abs(e) for e in errors]))
                                   if errors else 0.0),
        "spearman_per_sample": rhos,
        "mean_spearman": float(np.mean(rhos)) if rhos else None,
        "lambda": model.lam,
        "n_training_rows": int(train_rows.sum()),
    }

    # severity table at the case's default operating point (held out of
    # training by construction); divergent outages carry the sentinel and
    # are excluded from the error statistics
    u0 = space.default_vector()
    table = []
    table_errors: list[float] = []
    preds, exacts = [], []
    for k in ac_outages:
        exact, diverged = _exact_index_post(net, space, u0, k)
        pred = model.predict(net, space, u0, k)
        err = None if diverged else screen.prediction_error(pred, exact)
        table.append([k.label, pred, exact,
                      err if err is not None else "",
                      screen.classify(pred)])
        if not diverged and exact >= 0.05:
            table_errors.append(abs(err))
            preds.append(pred)
            exacts.append(exact)
    table.sort(key=lambda row: -row[1])
    validation["table_max_abs_error_percent"] = max(table_errors, default=0.0)
    validation["table_rows_scored"] = len(table_errors)
    validation["table_spearman"] = (
        float(spearmanr(preds, exacts).statistic) if len(preds) >= 3 else None)
    return model, validation, table


def _exact_index_post(net: Network, space: ControlSpace, u: np.ndarray,
                      k) -> tuple[float, bool]:
    from .netmodel import apply_contingency
    net_k = apply_contingency(net, k)
    res = opfcore.evaluate(net_k, space, u)
    params = screen.SecurityIndexParams.from_network(net_k)
    pi_value = screen.composite_index(res.state, params)
    return pi_value, not res.state.converged


def cmd_train_screen(args) -> int:
    overrides: dict = {}
    if args.case:
        overrides["case"] = args.case
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides.setdefault("screening", {})["samples"] = args.samples
    if args.out:
        overrides["output_dir"] = args.out
    cfg = load_config(args.config, overrides)
    seed = require_seed(cfg)
    stamp = {"config_hash": config_hash(cfg), "seed": seed}
    net = resolve_case(cfg)
    out = _ensure_outdir(cfg)
    workers = int(cfg["optimizer"]["workers"])

    started = time.perf_counter()
    model, validation, table = train_screening_model(net, cfg, seed, workers)
    validation["train_seconds"] = round(time.perf_counter() - started, 3)

    model_path = out / "screening_model.json"
    model.save(model_path)
    write_json(out / "screen_validation.json", {"validation": validation},
               stamp)
    write_csv(out / "screen_error_table.csv",
              ["branch", "predicted", "exact", "error_percent", "class"],
              [[r[0], _fmt(r[1], 4), _fmt(r[2], 4),
                _fmt(r[3], 4) if r[3] != "" else "n/a", r[4]]
               for r in table], stamp)
    if args.dump_training:
        sampler = screen.SamplerConfig(
            width=float(cfg["screening"]["width"]),
            per_kind={k: float(v) for k, v
                      in cfg["screening"]["width_per_kind"].items()},
            full_box=bool(cfg["screening"]["full_box"]), seed=seed)
        train = screen.build_training_set(
            net, sampler, int(cfg["screening"]["samples"]))
        rows = [[o] + [f"{v:.6g}" for v in row] + [f"{y:.6g}"]
                for o, row, y in zip(train.row_outage, train.x, train.y)]
        write_csv(out / "training_set.csv",
                  ["outage"] + train.feature_names + ["index"], rows, stamp)
    print(f"model written to {model_path} (lambda={model.lam:.6g}, "
          f"max holdout |err|="
          f"{validation['max_abs_error_percent']:.3f}%)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# rank


def cmd_rank(args) -> int:
    cfg = load_config(args.config, {"case": args.case} if args.case else {})
    if cfg.get("seed") is None:
        cfg["seed"] = 0
    stamp = {"config_hash": config_hash(cfg), "seed": cfg["seed"]}
    net = resolve_case(cfg)
    space = ControlSpace(net)
    try:
        model = screen.ScreeningModel.load(args.model)
    except FileNotFoundError:
        raise CliError(f"model file not found: {args.model}", EXIT_IO)
    if model.fingerprint != screen.model_fingerprint(net, space):
        raise CliError("model/case mismatch: feature layout hash differs",
                       EXIT_VALIDATION)
    u = load_control_overrides(space, args.controls)
    out = _ensure_outdir(cfg)

    ranked = screen.rank_contingencies(model, net, space, u)
    header = ["branch", "predicted", "class"]
    rows = []
    for k, pred, cls in ranked.entries:
        row = [k.label, _fmt(pred, 4), cls]
        if args.exact:
            exact, diverged = _exact_index_post(net, space, u, k)
            err = (None if diverged
                   else screen.prediction_error(pred, exact))
            row += [_fmt(exact, 4), _fmt(err, 4) if err is not None else "n/a"]
        rows.append(row)
    if args.exact:
        header += ["exact", "error_percent"]
    write_csv(out / "rank.csv", header, rows, stamp)
    write_json(out / "rank.json", {
        "critical_set": ranked.labels(),
        "entries": [{"branch": k.label, "predicted": pred, "class": cls}
                    for k, pred, cls in ranked.entries],
    }, stamp)
    print(f"critical set: {ranked.labels()}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize / decide


def cmd_optimize(args) -> int:
    overrides: dict = {}
    for key, val in (("case", args.case), ("seed", args.seed),
                     ("output_dir", args.out)):
        if val is not None:
            overrides[key] = val
    opt_over = {}
    for key, val in (("workers", args.workers),
                     ("population", args.population),
                     ("iterations", args.iterations)):
        if val is not None:
            opt_over[key] = val
    if opt_over:
        overrides["optimizer"] = opt_over
    cfg = load_config(args.config, overrides)
    seed = require_seed(cfg)
    stamp = {"config_hash": config_hash(cfg), "seed": seed}
    net = resolve_case(cfg)
    space = ControlSpace(net)
    out = _ensure_outdir(cfg)

    model_path = cfg["screening"]["model_path"]
    model_file = Path(model_path) if model_path else out / "screening_model.json"
    model = None
    refresh = cfg["screening"].get("refresh", "never")
    if args.no_screening:
        log.warning("screening disabled: every contingency will be checked")
    else:
        if (args.train_first or refresh == "per_run"
                or not model_file.exists()):
            trained, validation, table = train_screening_model(
                net, cfg, seed, int(cfg["optimizer"]["workers"]))
            trained.save(model_file)
            write_json(out / "screen_validation.json",
                       {"validation": validation}, stamp)
            model = trained
        else:
            model = screen.ScreeningModel.load(model_file)
            if model.fingerprint != screen.model_fingerprint(net, space):
                raise CliError("model/case mismatch: feature layout hash "
                               "differs; retrain with --train-first",
                               EXIT_VALIDATION)

    corr = cfg["corrective"]
    corrective = CorrectiveConfig(
        fraction=float(corr["fraction"]),
        per_kind=dict(corr["per_kind"]), per_name=dict(corr["per_name"]),
        max_probes=int(corr["max_probes"]), tol_feas=float(corr["tol_feas"]),
        include_discrete=bool(corr["include_discrete"]))
    opt = cfg["optimizer"]
    config = evo.EvoConfig(
        population=int(opt["population"]), iterations=int(opt["iterations"]),
        kappa=float(opt["kappa"]),
        crossover_rate=float(opt["crossover_rate"]),
        mutation_rate=(None if opt["mutation_rate"] is None
                       else float(opt["mutation_rate"])),
        eta_crossover=float(opt["eta_crossover"]),
        eta_mutation=float(opt["eta_mutation"]),
        workers=int(opt["workers"]), seed=seed)

    progress: list[evo.GenerationLog] = []
    started = time.perf_counter()
    with OpfProblem(net, model, corrective, workers=config.workers) as problem:
        base = problem.evaluate_one(space.default_vector())
        archive = evo.run(problem, config, progress=progress)
    elapsed = time.perf_counter() - started

    write_csv(out / "progress.csv",
              ["generation", "best_f1", "best_f2", "archive_size",
               "feasible_fraction"],
              [[g.generation, _fmt(g.best_f1, 4), _fmt(g.best_f2, 8),
                g.archive_size, _fmt(g.feasible_fraction, 4)]
               for g in progress], stamp)

    members = sorted(archive.members, key=lambda m: m.objectives[0])
    write_csv(out / "archive.csv",
              ["id", "f1", "f2", "violation"] + list(space.names),
              [[m.id, _fmt(m.objectives[0], 4), _fmt(m.objectives[1], 8),
                _fmt(m.violation, 8)] + [f"{v:.8g}" for v in m.genome]
               for m in members], stamp)
    write_json(out / "archive.json", {
        "infeasible_run": archive.infeasible_run,
        "wall_seconds": round(elapsed, 3),
        "members": [{
            "id": m.id, "f1": m.objectives[0], "f2": m.objectives[1],
            "violation": m.violation, "genome": m.genome.tolist(),
            "cstar": m.meta.get("cstar", []),
        } for m in members],
    }, stamp)

    if archive.infeasible_run or not archive.members:
        print("optimization finished with no feasible individual",
              file=sys.stderr)
        return EXIT_INFEASIBLE

    selections = _write_decision(archive.members, cfg, stamp, out, space)
    _write_summary(base, archive, selections, stamp, out)
    print(f"archive of {len(archive.members)} points in {elapsed:.1f} s; "
          f"artifacts in {out}")
    return EXIT_OK


def _write_decision(members, cfg, stamp, out, space):
    objectives = np.array([m.objectives for m in members])
    dec = cfg["decision"]
    selections = decide.select_bcs(objectives,
                                   n_clusters=int(dec["clusters"]),
                                   weights=tuple(dec["weights"]),
                                   seed=int(stamp["seed"]))
    payload = []
    for sel in selections:
        m = members[sel.member_index]
        payload.append({
            "cluster": sel.cluster, "d": sel.d,
            "f1": m.objectives[0], "f2": m.objectives[1],
            "genome": {name: float(v)
                       for name, v in zip(space.names, m.genome)},
            "critical_set": m.meta.get("cstar", []),
            "memberships": sel.memberships.tolist(),
        })
    write_json(out / "bcs.json", {"best_compromise_solutions": payload},
               stamp)
    return selections


def _write_summary(base, archive, selections, stamp, out):
    rows = [["before_optimization",
             _fmt(base["objectives"][0], 2), _fmt(base["objectives"][1], 6)]]
    members = sorted(archive.members, key=lambda m: m.objectives[0])
    for i, sel in enumerate(selections):
        m = members[sel.member_index]
        rows.append([f"after_optimization_bcs{i + 1}",
                     _fmt(m.objectives[0], 2), _fmt(m.objectives[1], 6)])
    write_csv(out / "summary.csv", ["status", "f1", "f2"], rows, stamp)


def cmd_decide(args) -> int:
    cfg = load_config(args.config, {})
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg.get("seed") is None:
        cfg["seed"] = 0
    if args.out:
        cfg["output_dir"] = args.out
    stamp = {"config_hash": config_hash(cfg), "seed": cfg["seed"]}
    try:
        doc = json.loads(Path(args.archive).read_text())
    except FileNotFoundError:
        raise CliError(f"archive file not found: {args.archive}", EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CliError(f"archive is not valid JSON: {exc}", EXIT_VALIDATION)
    members = doc.get("members", [])
    if not members:
        raise CliError("archive holds no members", EXIT_INFEASIBLE)
    out = _ensure_outdir(cfg)
    objectives = np.array([[m["f1"], m["f2"]] for m in members])
    dec = cfg["decision"]
    selections = decide.select_bcs(objectives,
                                   n_clusters=int(dec["clusters"]),
                                   weights=tuple(dec["weights"]),
                                   seed=int(cfg["seed"]))
    payload = []
    for sel in selections:
        m = members[sel.member_index]
        payload.append({"cluster": sel.cluster, "d": sel.d,
                        "f1": m["f1"], "f2": m["f2"],
                        "genome": m.get("genome"),
                        "critical_set": m.get("cstar", []),
                        "memberships": sel.memberships.tolist()})
    write_json(out / "bcs.json", {"best_compromise_solutions": payload},
               stamp)
    for entry in payload:
        print(f"cluster {entry['cluster']}: f1={entry['f1']:.2f} "
              f"f2={entry['f2']:.6f} d={entry['d']:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acdcopf",
        description="Corrective security-constrained multi-objective OPF "
                    "for hybrid AC/DC grids")
    sub = parser.add_subparsers(dest="command", required=True)

    pf = sub.add_parser("powerflow", help="solve one coupled power flow")
    pf.add_argument("--case")
    pf.add_argument("--config")
    pf.add_argument("--controls", help="JSON file of control overrides")
    pf.add_argument("--debug-trace", action="store_true")
    pf.set_defaults(fn=cmd_powerflow)

    ts = sub.add_parser("train-screen", help="train the screening model")
    ts.add_argument("--case")
    ts.add_argument("--config")
    ts.add_argument("--seed", type=int)
    ts.add_argument("--samples", type=int)
    ts.add_argument("--out")
    ts.add_argument("--dump-training", action="store_true")
    ts.set_defaults(fn=cmd_train_screen)

    rk = sub.add_parser("rank", help="rank contingencies by predicted index")
    rk.add_argument("--model", required=True)
    rk.add_argument("--case")
    rk.add_argument("--config")
    rk.add_argument("--controls")
    rk.add_argument("--exact", action="store_true",
                    help="also compute the exact index per outage")
    rk.set_defaults(fn=cmd_rank)

    op = sub.add_parser("optimize", help="run the optimization pipeline")
    op.add_argument("--config")
    op.add_argument("--case")
    op.add_argument("--seed", type=int)
    op.add_argument("--workers", type=int)
    op.add_argument("--population", type=int)
    op.add_argument("--iterations", type=int)
    op.add_argument("--out")
    op.add_argument("--train-first", action="store_true")
    op.add_argument("--no-screening", action="store_true")
    op.set_defaults(fn=cmd_optimize)

    de = sub.add_parser("decide", help="re-run decision on an archive")
    de.add_argument("--archive", required=True)
    de.add_argument("--config")
    de.add_argument("--seed", type=int)
    de.add_argument("--out")
    de.set_defaults(fn=cmd_decide)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
