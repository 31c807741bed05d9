"""Command-line runner: ``bclab <command> [--config FILE] [--key value ...]``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .applications import (entropy_exact, exponent_fit, hitting_exponent, max_log_distance, simulate_hitting,
                           smb_estimate)
from .config import COMMANDS, NON_SEMANTIC, ExperimentConfig, parse_value
from .engine import (ConvergenceReport, CylinderSchedule, envelope_check, expected_terms,
                     nonconventional_sum_shift, trajectory_source)
from .errors import BCLabError, ResourceError, ValidationError
from .gauss import entropy_reference
from .index import IndexFamily, check_assumption
from .processes import PHI, PSI, GaussDigits, mixing_profile, model_from_dict
from .rng import RngSeed
from .symbolic import ONE_SIDED, TWO_SIDED, Cylinder, DistanceParams

# ---------------------------------------------------------------------------
# building blocks from a config
# ---------------------------------------------------------------------------


def _side(cfg: ExperimentConfig, model) -> str:
    if cfg.sidedness:
        return cfg.sidedness
    return ONE_SIDED if model.one_sided_only else TWO_SIDED


def _gate(family: IndexFamily, horizon: int) -> None:
    report = check_assumption(family, horizon)
    if not report.verdict:
        raise ValidationError(f"index family fails the counting assumptions at horizon {horizon}: "
                              f"{json.dumps(report.witness, sort_keys=True)}")


def _radius_beta(sched: dict, model, family: IndexFamily) -> float:
    if "beta" in sched:
        return float(sched["beta"])
    delta = float(sched["delta"])
    sign = {"lower": -1.0, "upper": 1.0}.get(sched.get("bound"))
    if sign is None:
        raise ValidationError("radius schedule needs 'beta', or 'delta' with bound 'lower' or 'upper'")
    return (1.0 + sign * delta) / (2.0 * family.ell * entropy_exact(model))


def build_schedule(cfg: ExperimentConfig, model, family: IndexFamily, rs: RngSeed) -> CylinderSchedule:
    try:
        return _schedule(cfg, model, family, rs)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed schedule {cfg.schedule!r}: missing or bad field {exc}") from None


def _schedule(cfg, model, family, rs):
    sched = cfg.schedule
    kind = sched["kind"]
    if kind == "fixed":
        lo, hi = sched["interval"]
        cons = sched["constraints"]
        if cons and not isinstance(cons[0], list):
            cons = [cons] * family.ell
        return CylinderSchedule.fixed([Cylinder.on(lo, hi, c) for c in cons])
    if kind == "radius":
        beta = _radius_beta(sched, model, family)
        reach = int(math.floor(beta * math.log(cfg.N)))
        side = _side(cfg, model)
        lo = 0 if side == ONE_SIDED else -reach
        targets = [model.sample(lo, reach, rs, substream=i, sidedness=side) for i in range(1, family.ell + 1)]
        return CylinderSchedule.radius_schedule(beta, targets)
    if kind == "explicit":
        entries = {}
        for n, e in sched["entries"].items():
            lo, hi = e["interval"]
            entries[int(n)] = [Cylinder.on(lo, hi, c) for c in e["constraints"]]
        return CylinderSchedule.explicit(entries)
    raise ValidationError(f"unknown schedule kind {kind!r}")


# ---------------------------------------------------------------------------
# per-replicate work (module level so worker processes can pickle it)
# ---------------------------------------------------------------------------


def _bc_replicate(cfg: ExperimentConfig, stream: int):
    model = model_from_dict(cfg.model)
    family = IndexFamily(cfg.family)
    rs = RngSeed(cfg.seed, stream)
    schedule = build_schedule(cfg, model, family, rs)
    source = trajectory_source(model, schedule, family, cfg.N, rs)
    trace = nonconventional_sum_shift(source, schedule, family, cfg.N)
    E = np.cumsum(expected_terms(model, schedule, cfg.N))[trace.checkpoints - 1]
    rep = ConvergenceReport(trace.checkpoints, trace.values, E, cfg.epsilon, seed=cfg.seed, stream=stream)
    rows = list(rep.rows())
    summary = {"stream": stream, "S_N": int(rep.S[-1]), "E_N": float(rep.E[-1]), "ratio": rep.final_ratio,
               "envelope_violation_fraction": envelope_check(rep, cfg.C, cfg.epsilon)}
    return rows, summary


def _maxlog_replicate(cfg: ExperimentConfig, stream: int):
    model = model_from_dict(cfg.model)
    family = IndexFamily(cfg.family)
    rs = RngSeed(cfg.seed, stream)
    side = _side(cfg, model)
    t_lo = 0 if side == ONE_SIDED else -cfg.reach
    targets = [model.sample(t_lo, cfg.reach, rs, substream=i, sidedness=side) for i in range(1, family.ell + 1)]
    if model.is_iid:
        source = model.source(rs, 0)
    else:
        hi = family.max_value_bound(cfg.N) + cfg.reach
        if hi - t_lo + 1 > 10**8:
            raise ResourceError(f"window of {hi - t_lo + 1} symbols exceeds the resident limit")
        source = model.sample(t_lo, hi, rs, substream=0, sidedness=side)
    trace = max_log_distance(source, targets, family, cfg.N, DistanceParams(cfg.gamma))
    norm = trace.normalized()
    rows = [{"N": int(n), "M_N": float(m), "M_N_over_lnN": float(r), "seed": cfg.seed, "stream": stream}
            for n, m, r in zip(trace.checkpoints, trace.values, norm)]
    return rows, {"stream": stream, "M_N": trace.final, "M_N_over_lnN": float(norm[-1])}


def _entropy_replicate(cfg: ExperimentConfig, stream: int):
    model = model_from_dict(cfg.model)
    rs = RngSeed(cfg.seed, stream)
    side = _side(cfg, model)
    lo = 0 if side == ONE_SIDED else -cfg.radius
    target = model.sample(lo, cfg.radius, rs, sidedness=side)
    est = smb_estimate(model, target, cfg.radius)
    return [{"radius": cfg.radius, "estimate": est, "seed": cfg.seed, "stream": stream}], {"stream": stream}


def _hit_replicate(cfg: ExperimentConfig, stream: int):
    model = model_from_dict(cfg.model)
    family = IndexFamily(cfg.family)
    records = simulate_hitting(model, family, cfg.radii, 0, cfg.seed, cfg.cap, _side(cfg, model),
                               streams=[stream])
    return [r.as_row() for r in records], {"stream": stream, "records": records}


_REPLICATE = {"bc-run": _bc_replicate, "maxlog": _maxlog_replicate, "entropy": _entropy_replicate,
              "hit": _hit_replicate}


def _run_replicates(cfg: ExperimentConfig):
    """Results in stream order; the error of the lowest failing stream, if any."""
    fn = _REPLICATE[cfg.command]
    streams = list(range(cfg.replicates))
    outcomes: List[Tuple[int, Any, Optional[BaseException]]] = []
    if cfg.workers == 1:
        for s in streams:
            try:
                outcomes.append((s, fn(cfg, s), None))
            except BCLabError as exc:
                outcomes.append((s, None, exc))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [(s, pool.submit(fn, cfg, s)) for s in streams]
            for s, fut in futures:
                try:
                    outcomes.append((s, fut.result(), None))
                except BCLabError as exc:
                    outcomes.append((s, None, exc))
    outcomes.sort(key=lambda o: o[0])
    done = [o[1] for o in outcomes if o[2] is None]
    errors = [o[2] for o in outcomes if o[2] is not None]
    return done, (errors[0] if errors else None)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_mix(cfg):
    model = model_from_dict(cfg.model)
    phi = mixing_profile(model, PHI, cfg.k_max)
    psi = mixing_profile(model, PSI, cfg.k_max)
    rows = [{"k": k, "phi": phi.values[k], "psi": psi.values[k]} for k in range(1, cfg.k_max + 1)]
    return rows, {"model": model.to_dict(), "k_max": cfg.k_max}, None


def _cmd_check_q(cfg):
    family = IndexFamily(cfg.family)
    report = check_assumption(family, cfg.horizon)
    summary = report.to_dict()
    err = None
    if not report.verdict:
        err = ValidationError(f"index family fails the counting assumptions: "
                              f"{json.dumps(report.witness, sort_keys=True)}")
    return [], summary, err


def _cmd_bc_run(cfg):
    _gate(IndexFamily(cfg.family), max(cfg.horizon, cfg.N))
    done, err = _run_replicates(cfg)
    rows = [r for rr, _ in done for r in rr]
    reps = [s for _, s in done]
    summary = {"replicates": reps, "epsilon": cfg.epsilon, "C": cfg.C}
    if reps:
        ratios = [s["ratio"] for s in reps]
        summary["median_ratio"] = float(np.median(ratios))
    return rows, summary, err


def _cmd_maxlog(cfg):
    _gate(IndexFamily(cfg.family), max(cfg.horizon, cfg.N))
    done, err = _run_replicates(cfg)
    rows = [r for rr, _ in done for r in rr]
    reps = [s for _, s in done]
    summary = {"replicates": reps, "gamma": cfg.gamma}
    if reps:
        model = model_from_dict(cfg.model)
        summary["median_M_N_over_lnN"] = float(np.median([s["M_N_over_lnN"] for s in reps]))
        if not isinstance(model, GaussDigits):
            summary["limit"] = cfg.gamma / (2 * len(cfg.family) * entropy_exact(model))
    return rows, summary, err


def _cmd_entropy(cfg):
    model = model_from_dict(cfg.model)
    done, err = _run_replicates(cfg)
    rows = [r for rr, _ in done for r in rr]
    est = [r["estimate"] for r in rows]
    exact = entropy_reference() if isinstance(model, GaussDigits) else entropy_exact(model)
    summary = {"radius": cfg.radius, "divisor": "r" if _side(cfg, model) == ONE_SIDED else "2r",
               "exact_h": exact, "exact_source": "quadrature" if isinstance(model, GaussDigits) else "formula"}
    if est:
        summary["mean"] = float(np.mean(est))
        summary["stderr"] = float(np.std(est, ddof=1) / math.sqrt(len(est))) if len(est) > 1 else None
    return rows, summary, err


def _cmd_hit(cfg):
    family = IndexFamily(cfg.family)
    _gate(family, cfg.horizon)
    model = model_from_dict(cfg.model)
    done, err = _run_replicates(cfg)
    rows = [r for rr, _ in done for r in rr]
    records = [rec for _, s in done for rec in s["records"]]
    summary = {"cap": cfg.cap, "radii": cfg.radii}
    if err is None:
        target = None
        if not isinstance(model, GaussDigits):
            target = hitting_exponent(model, family, one_sided=_side(cfg, model) == ONE_SIDED)
        try:
            summary["fit"] = exponent_fit(records, target=target).to_dict()
        except BCLabError as exc:
            err = exc
    return rows, summary, err


_COMMANDS = {"mix": _cmd_mix, "check-q": _cmd_check_q, "bc-run": _cmd_bc_run, "maxlog": _cmd_maxlog,
             "entropy": _cmd_entropy, "hit": _cmd_hit}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable, allow_nan=True) + "\n"


def error_object(exc: BaseException) -> Dict[str, Any]:
    return {"kind": getattr(exc, "kind", "error"), "type": type(exc).__name__, "message": str(exc),
            "exit_code": getattr(exc, "exit_code", 1)}


def write_outputs(cfg: ExperimentConfig, rows: List[dict], summary: dict, err: Optional[BaseException]) -> None:
    os.makedirs(cfg.out, exist_ok=True)
    stem = os.path.join(cfg.out, cfg.command)
    status = "ok" if err is None else "failed"
    if cfg.command != "check-q":
        if cfg.format == "csv":
            with open(stem + ".csv", "w", newline="", encoding="utf-8") as fh:
                if rows:
                    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                    writer.writeheader()
                    writer.writerows(rows)
                if err is not None:
                    fh.write("# status: failed\n")
        else:
            with open(stem + ".rows.json", "w", encoding="utf-8") as fh:
                fh.write(_dump({"status": status, "rows": rows}))
    full = {"status": status, "command": cfg.command, "version": __version__, "config_hash": cfg.digest(),
            "config": {k: v for k, v in cfg.to_dict().items() if k not in NON_SEMANTIC},
            **summary}
    if err is not None:
        full["error"] = error_object(err)
    with open(stem + ".summary.json", "w", encoding="utf-8") as fh:
        fh.write(_dump(full))


def run(cfg: ExperimentConfig) -> int:
    """Run one command, write its artifacts and return the exit status."""
    try:
        rows, summary, err = _COMMANDS[cfg.command](cfg)
    except BCLabError as exc:
        rows, summary, err = [], {}, exc
    write_outputs(cfg, rows, summary, err)
    if err is not None:
        sys.stderr.write(json.dumps({"status": "failed", "error": error_object(err)}, sort_keys=True) + "\n")
        return getattr(err, "exit_code", 1)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bclab", description="Nonconventional Borel-Cantelli experiments.")
    parser.add_argument("--version", action="version", version=f"bclab {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--workers", type=int)
    return parser


def _overrides(extra: List[str]) -> Dict[str, Any]:
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ValidationError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ValidationError(f"flag --{key} needs a value")
            value = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = parse_value(value)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(command=args.command)
        overrides = _overrides(extra)
        for name in ("seed", "replicates", "out", "format", "workers"):
            if getattr(args, name) is not None:
                overrides[name] = getattr(args, name)
        overrides["command"] = args.command
        cfg = cfg.with_overrides(overrides)
    except (BCLabError, OSError, TypeError) as exc:
        err = exc if isinstance(exc, BCLabError) else ValidationError(str(exc))
        sys.stderr.write(json.dumps({"status": "failed", "error": error_object(err)}, sort_keys=True) + "\n")
        return err.exit_code
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
