"""Batch front-end.

``flatpencil run <manifest>`` loads a JSON manifest describing metrics and
models as expression strings, runs the requested checks, and emits one JSON
report per job (newline-delimited) to stdout or --out.  Exit code 0 when all
job assertions hold, 1 when any verdict disagrees, 2 on input errors.

``flatpencil identities`` draws random metric pairs and verifies the
algebraic identities tying the Nijenhuis tensor to the obstruction tensor M,
plus the defining relations of metric connections and curvature
antisymmetries.  The report is deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .compat import (
    MetricPair,
    check_almost_compatible,
    check_compatible,
    check_flat_pencil,
    default_lambda_samples,
    full_report,
    sample_points,
)
from .errors import DegenerateMetric, FlatPencilError
from .expr import parse
from .geometry import CONTRAVARIANT, MetricField, geometry_jet, affinor_at, nijenhuis
from .lame import (
    LameData,
    lame_residuals,
    reduction_residual,
    rotation_from_H,
    assemble_pair,
    write_beta_grid,
)
from .twocomp import TwoCompModel, assemble_two_metrics, check_lequa, check_sys
from .zakharov import (
    DressingProblem,
    build_kernel,
    extract_beta,
    solve_integral_equation,
)


class ManifestError(Exception):
    pass


def _parse_field(text, dim, name):
    try:
        return parse(text, dim)
    except FlatPencilError as exc:
        raise ManifestError(f"bad expression for {name!r}: {exc}") from exc


def _build_metric(spec, dim, expressions, name):
    if isinstance(spec, str):
        spec = {"ref": spec}
    if "identity" in spec:
        return MetricField.from_constant(np.eye(dim))
    if "diagonal" in spec:
        fields = [
            _parse_field(_resolve(t, expressions), dim, name)
            for t in spec["diagonal"]
        ]
        return MetricField.diagonal(fields, CONTRAVARIANT)
    if "entries" in spec:
        rows = spec["entries"]
        upper = {}
        for i in range(dim):
            for j in range(i, dim):
                if rows[i][j] != rows[j][i]:
                    raise ManifestError(f"metric {name!r} not symmetric")
                upper[(i, j)] = _parse_field(
                    _resolve(rows[i][j], expressions), dim, name
                )
        return MetricField.from_upper(upper, CONTRAVARIANT)
    raise ManifestError(f"metric {name!r}: need identity, diagonal or entries")


def _resolve(text, expressions):
    return expressions.get(text, text)


def _sampling(job, dim, seed):
    cfg = job.get("sampling", {})
    return sample_points(
        dim,
        cfg.get("count", 10),
        seed=seed,
        lo=cfg.get("lo", 0.2),
        hi=cfg.get("hi", 2.0),
        min_sep=cfg.get("min_sep", 0.0),
    )


def _lambdas(job, seed):
    if "lambdas" in job:
        return [
            (complex(l1), complex(l2)) for l1, l2 in job["lambdas"]
        ]
    return default_lambda_samples(seed)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, complex):
        if obj.imag == 0:
            return obj.real
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _run_pair_job(job, manifest, seed, tol, map_fn):
    dim = job.get("dim", manifest.get("dim"))
    expressions = manifest.get("expressions", {})
    metrics = manifest.get("metrics", {})
    for name in (job["g1"], job["g2"]):
        if name not in metrics:
            raise ManifestError(f"metric {name!r} is not defined")
    g1 = _build_metric(metrics[job["g1"]], dim, expressions, job["g1"])
    g2 = _build_metric(metrics[job["g2"]], dim, expressions, job["g2"])
    pts = _sampling(job, dim, seed)
    pair = MetricPair(g1, g2, pts, lambda_samples=_lambdas(job, seed),
                      tol=job.get("tol", tol))
    if job["kind"] == "flat-pencil":
        rep = full_report(pair, map_fn)
        verdicts = {
            "almost_compatible": rep.almost_compatible,
            "compatible": rep.compatible,
            "flat_pencil": rep.flat_pencil,
            "nonsingular": rep.nonsingular,
        }
        residuals = rep.max_residuals
        witnesses = rep.witnesses
    else:
        almost = check_almost_compatible(pair, map_fn)
        comp = check_compatible(pair, map_fn)
        verdicts = {
            "almost_compatible": almost.passed,
            "compatible": comp.passed,
        }
        residuals = comp.max_residuals
        witnesses = comp.witnesses
    return verdicts, residuals, witnesses


def _run_lame_job(job, manifest, seed, tol):
    dim = job.get("dim", manifest.get("dim"))
    expressions = manifest.get("expressions", {})
    H = [_parse_field(_resolve(t, expressions), dim, "H") for t in job["H"]]
    f = [_parse_field(_resolve(t, expressions), 1, "f") for t in job["f"]]
    data = LameData(H, f)
    pts = _sampling(job, dim, seed)
    rot = rotation_from_H(data)
    r1, r2 = lame_residuals(rot, pts)
    r3 = reduction_residual(rot, f, pts)
    g1, g2 = assemble_pair(data)
    pair = MetricPair(g1, g2, pts, lambda_samples=_lambdas(job, seed),
                      tol=job.get("tol", tol))
    flat = check_flat_pencil(pair)
    residual_side = max(r1, r2, r3) < pair.tol
    verdicts = {
        "flat_pencil": flat.passed,
        "residuals_vanish": bool(residual_side),
        "equivalence": flat.passed == residual_side,
    }
    residuals = {"lam_system": float(abs(r1)), "lam_divergence": float(abs(r2)),
                 "lam_reduction": float(abs(r3)), **flat.max_residuals}
    return verdicts, residuals, flat.witnesses


def _run_twocomp_job(job, manifest, seed, tol):
    expressions = manifest.get("expressions", {})
    get = lambda key: _resolve(job[key], expressions)
    m = TwoCompModel(
        _parse_field(get("b1"), 2, "b1"),
        _parse_field(get("b2"), 2, "b2"),
        _parse_field(get("F"), 2, "F"),
        int(job.get("eps", [-1, 1])[0]),
        int(job.get("eps", [-1, 1])[1]),
        _parse_field(get("f1"), 1, "f1"),
        _parse_field(get("f2"), 1, "f2"),
    )
    pts = _sampling(job, 2, seed)
    job_tol = job.get("tol", tol)
    rs = check_sys(m, pts).max_residuals["sys"]
    rl = check_lequa(m, pts).max_residuals["lequa"]
    g1, g2 = assemble_two_metrics(m)
    pair = MetricPair(g1, g2, pts, lambda_samples=_lambdas(job, seed),
                      tol=job_tol)
    flat = check_flat_pencil(pair)
    residual_side = max(rs, rl) < job_tol
    verdicts = {
        "flat_pencil": flat.passed,
        "residuals_vanish": bool(residual_side),
        "equivalence": flat.passed == residual_side,
    }
    residuals = {"sys": float(abs(rs)), "lequa": float(abs(rl)),
                 **flat.max_residuals}
    return verdicts, residuals, flat.witnesses


def _run_dressing_job(job, manifest, seed, tol):
    expressions = manifest.get("expressions", {})
    dim = job.get("dim", manifest.get("dim"))
    phi = {}
    for key, text in job["phi"].items():
        i, j = (int(t) for t in key.split(","))
        phi[(i, j)] = _parse_field(_resolve(text, expressions), 2, key)
    f = None
    if "f" in job:
        f = [
            _parse_field(_resolve(t, expressions), 1, "f") for t in job["f"]
        ]
    p = DressingProblem(
        dim, phi, np.asarray(job["u"], dtype=float),
        job.get("s_min", 0.0), job.get("s_max", 1.0), job.get("m", 64), f
    )
    kernel = build_kernel(p)
    rows = job.get("rows", [0])
    sol = solve_integral_equation(kernel, rows=rows)
    beta = extract_beta(sol)
    if "out_beta" in job:
        write_beta_grid(job["out_beta"], np.nan_to_num(beta), p.s_min, p.s_max)
    verdicts = {"solved": True}
    residuals = {"condition_number": max(sol.cond.values())}
    return verdicts, residuals, {}


def _random_poly_metric(rng, dim):
    """Random nondegenerate contravariant metric with bounded coefficients."""
    upper = {}
    monomials = [f"u{k+1}" for k in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            c = rng.uniform(-0.3, 0.3, size=dim + 2)
            terms = [f"({c[0]:.6f})"]
            terms += [
                f"({c[k+1]:.6f})*{monomials[k]}" for k in range(dim)
            ]
            terms.append(f"({c[-1]:.6f})*exp(u1/4)")
            if i == j:
                terms.append("2.5")
            upper[(i, j)] = parse("+".join(terms), dim)
    return MetricField.from_upper(upper, CONTRAVARIANT)


def identity_residuals(g1, g2, point):
    """Relative residuals of the structural identities at one point.

    Covers: the three contractions relating g1-lowered Nijenhuis components
    to sums of M-tensor permutations; metric-compatibility and symmetry of
    each Levi-Civita connection in contravariant form; curvature
    antisymmetries.
    """
    j1 = geometry_jet(g1, point)
    j2 = geometry_jet(g2, point)
    aff = affinor_at(g1, g2, point)
    N = nijenhuis(aff)
    M = (
        np.einsum("is,jks->ijk", j1.g_up, j2.gamma_contra)
        - np.einsum("js,iks->ijk", j2.g_up, j1.gamma_contra)
        - np.einsum("js,iks->ijk", j1.g_up, j2.gamma_contra)
        + np.einsum("is,jks->ijk", j2.g_up, j1.gamma_contra)
    )
    lhs = np.einsum(
        "sp,prq,ri,qj,sk->ijk", j1.g_down, N, j2.g_up, j2.g_up, j2.g_up
    )
    scale = 1.0 + max(np.max(np.abs(lhs)), np.max(np.abs(M)))
    mn1 = lhs - (
        np.einsum("kji->ijk", M) + np.einsum("ikj->ijk", M) + M
    )
    mn2 = 2 * (np.einsum("ikj->ijk", M) + M) - (
        lhs + np.einsum("ikj->ijk", lhs)
    )
    mn3 = 2 * np.einsum("kji->ijk", M) - (lhs - np.einsum("ikj->ijk", lhs))
    out = {
        "mn1": np.max(np.abs(mn1)) / scale,
        "mn2": np.max(np.abs(mn2)) / scale,
        "mn3": np.max(np.abs(mn3)) / scale,
    }
    for tag, j in (("g1", j1), ("g2", j2)):
        sc = 1.0 + np.max(np.abs(j.dg_up)) + np.max(np.abs(j.gamma_contra))
        comp = (
            np.einsum("kij->ijk", j.dg_up)
            + j.gamma_contra
            + np.einsum("jik->ijk", j.gamma_contra)
        )
        symm = (
            np.einsum("is,jks->ijk", j.g_up, j.gamma_contra)
            - np.einsum("js,iks->ijk", j.g_up, j.gamma_contra)
        )
        scr = 1.0 + np.max(np.abs(j.riemann_upup))
        anti_kl = j.riemann_upup + np.einsum("ijkl->ijlk", j.riemann_upup)
        anti_ij = j.riemann_upup + np.einsum("ijkl->jikl", j.riemann_upup)
        out[f"ch1_{tag}"] = np.max(np.abs(comp)) / sc
        out[f"ch2_{tag}"] = np.max(np.abs(symm)) / sc
        out[f"curv_antisym_kl_{tag}"] = np.max(np.abs(anti_kl)) / scr
        out[f"curv_antisym_ij_{tag}"] = np.max(np.abs(anti_ij)) / scr
    return {k: float(v) for k, v in out.items()}


def run_identities(trials, seed):
    """Random-pair identity sweep; deterministic report for a fixed seed."""
    rng = np.random.default_rng(seed)
    worst = {}
    checked = 0
    while checked < trials:
        dim = 2 if checked % 2 == 0 else 3
        g1 = _random_poly_metric(rng, dim)
        g2 = _random_poly_metric(rng, dim)
        point = rng.uniform(0.2, 1.0, size=dim)
        try:
            res = identity_residuals(g1, g2, point)
        except DegenerateMetric:
            continue
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), v)
        checked += 1
    return {
        "job": "identities",
        "tool_version": __version__,
        "trials": trials,
        "seed": seed,
        "max_relative_residuals": {k: worst[k] for k in sorted(worst)},
        "all_below_1e-8": bool(all(v < 1e-8 for v in worst.values())),
    }


_PAIR_KINDS = {"pair-check", "flat-pencil"}


def _run_job(idx, job, manifest, seed, tol, map_fn):
    kind = job.get("kind")
    t0 = time.perf_counter()
    if kind in _PAIR_KINDS:
        verdicts, residuals, witnesses = _run_pair_job(
            job, manifest, seed, tol, map_fn
        )
    elif kind == "lame-check":
        verdicts, residuals, witnesses = _run_lame_job(job, manifest, seed, tol)
    elif kind == "two-component":
        verdicts, residuals, witnesses = _run_twocomp_job(
            job, manifest, seed, tol
        )
    elif kind == "dressing":
        verdicts, residuals, witnesses = _run_dressing_job(
            job, manifest, seed, tol
        )
    elif kind == "identities":
        rep = run_identities(job.get("trials", 10), seed)
        verdicts = {"all_identities_hold": rep["all_below_1e-8"]}
        residuals = rep["max_relative_residuals"]
        witnesses = {}
    else:
        raise ManifestError(f"job {idx}: unknown kind {kind!r}")

    ok = True
    for key, expected in job.get("assert", {}).items():
        if key not in verdicts:
            raise ManifestError(f"job {idx}: no verdict named {key!r}")
        if verdicts[key] != expected:
            ok = False
    report = {
        "job": idx,
        "kind": kind,
        "tool_version": __version__,
        "seed": seed,
        "verdicts": _jsonify(verdicts),
        "max_residuals": _jsonify(residuals),
        "witnesses": _jsonify(witnesses),
        "assertions_hold": ok,
        "elapsed_s": round(time.perf_counter() - t0, 6),
    }
    return report, ok


def _cmd_run(args):
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot load manifest: {exc}", file=sys.stderr)
        return 2
    jobs = manifest.get("jobs", [])
    out = open(args.out, "w") if args.out else sys.stdout
    map_fn = map
    pool = None
    if args.parallel:
        pool = ThreadPoolExecutor()
        map_fn = pool.map
    all_ok = True
    try:
        for idx, job in enumerate(jobs):
            report, ok = _run_job(idx, job, manifest, args.seed, args.tol,
                                  map_fn)
            all_ok = all_ok and ok
            print(json.dumps(report, sort_keys=True), file=out)
    except (ManifestError, KeyError, FlatPencilError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if pool is not None:
            pool.shutdown()
        if args.out:
            out.close()
    return 0 if all_ok else 1


def _cmd_identities(args):
    report = run_identities(args.trials, args.seed)
    text = json.dumps(report, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            print(text, file=fh)
    else:
        print(text)
    return 0 if report["all_below_1e-8"] else 1


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="flatpencil",
        description="Compatibility checks for pencils of metrics",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run jobs from a JSON manifest")
    run_p.add_argument("manifest")
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--parallel", action="store_true")
    run_p.add_argument("--tol", type=float, default=1e-8)
    run_p.set_defaults(func=_cmd_run)

    id_p = sub.add_parser("identities", help="random identity sweep")
    id_p.add_argument("--trials", type=int, default=100)
    id_p.add_argument("--seed", type=int, default=0)
    id_p.add_argument("--out", default=None)
    id_p.set_defaults(func=_cmd_identities)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
