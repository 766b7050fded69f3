"""Command-line front end: ``randers-soliton {check,curvature,soliton,flow,report} MODEL``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy.linalg

from . import __version__, curvature, flow, soliton
from .lie_algebra import AlgebraError, derivation_basis, validate
from .model import Model, ModelError, load_model
from .randers import TangentSample

REPORT_SCHEMA = "randers-report/1"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
THREADS_ENV = "RANDERS_THREADS"

SIGN_NOTE = (
    "classification uses the sign of c in Ric = c Id + sym(D): c > 0 shrinking, c < 0 expanding; "
    "the Riemannian soliton constant lambda of L_X a = 2(lambda a - ric) is reported separately and "
    "no identification lambda = +/-c is assumed"
)
UNIVERSAL_NOTE = "one (c, D) is fitted across all sampled directions y (universal reading); per-direction fits are diagnostic only"


class NumericalFailure(RuntimeError):
    pass


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    """Ordered map; parallel when RANDERS_THREADS > 1."""
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _f(x) -> float:
    x = float(x)
    return 0.0 if x == 0 else x  # no negative zeros in reports


def _arr(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _f(a)
    return [_arr(v) for v in a]


# sections ---------------------------------------------------------------------

def _algebra_section(model: Model) -> dict:
    rep = validate(model.alg)
    return {
        "antisymmetry": {"pass": rep.antisymmetry, "residual": _f(rep.antisymmetry_residual)},
        "jacobi": {"pass": rep.jacobi, "residual": _f(rep.jacobi_residual)},
        "nilpotent": {"pass": rep.nilpotent, "class": rep.nilpotency_class, "series_dims": rep.series_dims},
        "class_bound": {"pass": rep.within_class_bound, "declared": model.alg.class_bound},
    }


def _require_valid(model: Model):
    rep = validate(model.alg)
    if not rep.jacobi:
        i, j, k = rep.jacobi_witness
        raise ModelError(f"jacobi violation at ({i},{j},{k}), residual {rep.jacobi_residual:.3g}", None, model.source)
    if not rep.antisymmetry:
        raise ModelError("structure constants are not antisymmetric", None, model.source)
    if not rep.nilpotent:
        raise ModelError(f"algebra is not nilpotent (lower central series {rep.series_dims})", None, model.source)
    if not rep.within_class_bound:
        raise ModelError(
            f"nilpotency class {rep.nilpotency_class} exceeds class_bound {model.alg.class_bound}", None, model.source
        )


def check_section(model: Model) -> dict:
    s = model.structure
    killing = soliton.killing_check(s)
    flow_killing = soliton.killing_flow_check(s)
    dg = soliton.douglas_check(s)
    bw = soliton.berwald_check(s)
    out = {"algebra": _algebra_section(model)}
    out["admissibility"] = {"pass": bool(s.x_norm < 1.0), "x_norm": _f(s.x_norm)}
    out["killing"] = {"pass": killing.holds, "residual": _f(killing.residual)}
    out["killing_flow"] = {"pass": flow_killing.holds, "residual": _f(flow_killing.residual)}
    out["douglas"] = {"pass": dg.holds, "residual": _f(dg.residual)}
    if not dg.holds:
        out["douglas"]["witness"] = {"i": dg.witness[0], "j": dg.witness[1], "value": _f(dg.witness[2])}
    out["berwald"] = {"pass": bw.holds, "residual": _f(bw.residual)}
    return out


def _curvature_samples(model: Model, at, count: int, seed: int) -> list[TangentSample]:
    n = model.structure.dim
    samples = []
    for y in at or ():
        if len(y) != n:
            raise ModelError(f"--at expects {n} components, got {len(y)}", None, "command line")
        if not np.any(y):
            raise ModelError("--at direction must be nonzero", None, "command line")
        samples.append(TangentSample(np.zeros(n), y))
    rng = np.random.default_rng(seed)
    for _ in range(count):
        samples.append(TangentSample(rng.normal(scale=0.5, size=n), rng.normal(size=n)))
    return samples


def curvature_section(model: Model, at, count: int, seed: int) -> dict:
    s = model.structure
    samples = _curvature_samples(model, at, count, seed)

    def one(smp):
        v = curvature.evaluate(s, smp)
        return {
            "x": _arr(smp.x),
            "y": _arr(smp.y),
            "F": _f(v.F),
            "g": _arr(v.g),
            "cartan_norm": _f(v.cartan_norm),
            "spray": _arr(v.spray),
            "ricci_scalar": _f(v.ric_scalar),
            "ric_F": _arr(v.ric_F),
            "ric_F_eigenvalues": _arr(np.linalg.eigvalsh(v.ric_F)),
            "ricci_operator_eigenvalues": _arr(scipy.linalg.eigh(v.ric_F, v.g, eigvals_only=True)),
        }

    return {"seed": seed, "samples": _pmap(one, samples)}


def soliton_section(model: Model, count: int, seed: int, force: bool) -> tuple[dict, list]:
    s = model.structure
    warnings_ = []
    if not s.is_riemannian:
        k = soliton.killing_check(s)
        if not k.holds:
            msg = f"X is not Killing (ad-skew residual {k.residual:.3g})"
            if not force:
                raise ModelError(msg + "; rerun with --force to fit anyway", None, model.source)
            warnings_.append(msg + "; proceeding because of --force")
    der = derivation_basis(s.alg)
    dirs = soliton.sphere_directions(s.A, count, seed)
    fit = soliton.semialgebraic_fit(s, dirs, der)
    out = {
        "seed": seed,
        "directions": count,
        "dim_der": der.dim_der,
        "c": _f(fit.c),
        "classification": fit.classification,
        "D": _arr(fit.D),
        "sym_D": _arr(fit.symmetric_part(s.A)),
        "residual": _f(fit.residual),
        "residual_quantiles": {k: _f(v) for k, v in fit.quantiles().items()},
        "rank_deficient": fit.rank_deficient,
        "leibniz_residual": _f(fit.leibniz_residual),
        "finsler_flow_residual": _f(flow.finsler_flow_residual(s, fit, dirs)),
    }
    if s.is_riemannian:
        lf = soliton.lauret_fit(s.alg, s.A, der)
        out["riemannian"] = {"c": _f(lf.c), "residual": _f(lf.residual)}
    out["notes"] = [UNIVERSAL_NOTE, SIGN_NOTE]
    return out, warnings_


def flow_section(model: Model, t_end: float, normalized: bool, trajectory: str | None) -> dict:
    alg, A0 = model.alg, model.structure.A
    kind = "normalized" if normalized else "unnormalized"
    traj = flow.integrate(alg, A0, kind, t_end)
    if trajectory:
        path = Path(trajectory)
        path.write_text(traj.to_json() if path.suffix == ".json" else traj.to_csv())
    if traj.blow_up:
        raise NumericalFailure(f"flow blow-up detected at t = {traj.times[-1]:.6g}")
    grid = np.linspace(0.0, t_end, 6)
    deviation, _ = flow.self_similarity_check(alg, A0, t_grid=grid)
    return {
        "kind": kind,
        "t_end": _f(t_end),
        "steps": int(len(traj.times) - 1),
        "rejected_steps": traj.rejected,
        "blow_up": traj.blow_up,
        "initial_scalar_curvature": _f(flow.scalar_curvature(alg, A0)),
        "final_scalar_curvature": _f(flow.scalar_curvature(alg, traj.final)),
        "final_metric": _arr(traj.final),
        "min_eigenvalue": _f(np.min(traj.min_eigenvalues)),
        "det_drift": _f(traj.det_drift()),
        "self_similarity_deviation": _f(deviation),
    }


# driver -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randers-soliton", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("model", help="model JSON file or bundled catalog name")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte-identity)")

    def sampling(sp, default):
        sp.add_argument("--samples", type=int, default=default, help=f"number of sampled points (default {default})")
        sp.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")

    common(sub.add_parser("check", help="algebra axioms, admissibility, Killing/Douglas/Berwald"))
    sp = sub.add_parser("curvature", help="Finsler curvature at sampled tangent vectors")
    common(sp)
    sampling(sp, 0)
    sp.add_argument("--at", type=float, nargs="+", action="append", metavar="Y", help="direction at the identity")
    sp = sub.add_parser("soliton", help="semialgebraic Ricci-soliton fit")
    common(sp)
    sampling(sp, 32)
    sp.add_argument("--force", action="store_true", help="fit even if X is not Killing")
    sp = sub.add_parser("flow", help="Riemannian Ricci flow of the metric")
    common(sp)
    sp.add_argument("--t", type=float, default=1.0, dest="t_end", help="final time (default 1)")
    sp.add_argument("--normalized", action="store_true", help="volume-normalized flow")
    sp.add_argument("--trajectory", help="export trajectory (.csv or .json)")
    sp = sub.add_parser("report", help="all of the above")
    common(sp)
    sampling(sp, 32)
    sp.add_argument("--t", type=float, default=1.0, dest="t_end")
    sp.add_argument("--normalized", action="store_true")
    sp.add_argument("--force", action="store_true")
    return p


def _echo(args) -> dict:
    skip = {"output", "model", "trajectory"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def run(args) -> tuple[dict, list]:
    model = load_model(args.model)
    results, warnings_, timing = {}, [], {}

    def timed(name, fn):
        t0 = time.perf_counter()
        val = fn()
        timing[name] = round(time.perf_counter() - t0, 6)
        return val

    _require_valid(model)
    cmd = args.command
    if cmd in ("check", "report"):
        results["check"] = timed("check", lambda: check_section(model))
    if cmd in ("curvature", "report"):
        if cmd == "report":
            at, count = None, 4
        else:
            if args.samples < 0:
                raise ModelError("--samples must be nonnegative", None, "command line")
            at, count = args.at, args.samples
            if not at and not count:
                at = [np.eye(model.structure.dim)[-1]]
        results["curvature"] = timed("curvature", lambda: curvature_section(model, at, count, args.seed))
    if cmd in ("soliton", "report"):
        if args.samples < 2:
            raise ModelError("--samples must be at least 2 for a fit", None, "command line")
        sol, w = timed("soliton", lambda: soliton_section(model, args.samples, args.seed, args.force))
        results["soliton"] = sol
        warnings_ += w
    if cmd in ("flow", "report"):
        if args.t_end <= 0:
            raise ModelError("--t must be positive", None, "command line")
        traj_path = getattr(args, "trajectory", None)
        results["flow"] = timed("flow", lambda: flow_section(model, args.t_end, args.normalized, traj_path))

    report = {
        "schema": REPORT_SCHEMA,
        "tool": {"name": "randers-soliton", "version": __version__},
        "command": {"name": args.command, "options": _echo(args)},
        "input": {"source": model.source, "sha256": model.sha256},
        "results": results,
    }
    if warnings_:
        report["warnings"] = warnings_
    if args.timing:
        report["timing"] = timing
    return report, warnings_


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, warnings_ = run(args)
    except (ModelError, FileNotFoundError) as exc:
        msg = exc.diagnostic() if isinstance(exc, ModelError) else f"error: {exc}"
        print(msg, file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, flow.FlowError, AlgebraError, curvature.FlagError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for w in warnings_:
        print(f"warning: {w}", file=sys.stderr)
    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
