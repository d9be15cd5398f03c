"""Experiment drivers behind the CLI subcommands.

Each driver takes an already-validated section of the run configuration and
a seeded ``random.Random`` and returns ``(exit_code, report_dict)`` plus any
CSV tables.  Nothing here touches the filesystem.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .limitscrit import SeqFamily, closure_supercyclic_verdict
from .orbit import ModeRequirementError, build_witness, orbit_trace
from .rightinv import (
    ORACLE_MAX_D,
    apply_s_lambda_pow,
    build_m,
    eval_f,
    inv_matrix_oracle,
    inverse_entry_log_bound,
    permutation_det,
    right_inverse_dims,
    solve_right_inverse,
)
from .shiftops import OperatorSeries, apply_series, series_norm_bracket
from .space import (
    ConstantOne,
    LogMagnitude,
    SparseVec,
    WeightSeq,
    get_mode,
    random_vector,
    to_scalar,
    EXACT,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_EXCLUDED = 3
EXIT_MODE = 4

FLOAT_RESIDUAL = 1e-9
# absorbs rounding of the log-domain comparison, nothing else
LOG_GUARD = 1e-12


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _log_le(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + LOG_GUARD * max(1.0, abs(rhs))


def _residual_ok(residual, scale) -> bool:
    if get_mode() == EXACT:
        return residual == 0
    return residual <= FLOAT_RESIDUAL * scale


def _power(lam: SparseVec, w: WeightSeq, v: SparseVec, k: int) -> SparseVec:
    T = OperatorSeries(lam, w)
    for _ in range(k):
        v = apply_series(T, v)
    return v


def check_right_inverse(lam: SparseVec, w: WeightSeq, d: int, y: SparseVec, c_x=1) -> list[str]:
    """A1, B1 and C1 on one instance; returns the names of violated properties."""
    bad = []
    s = solve_right_inverse(lam, w, d, y)
    back = apply_series(OperatorSeries(lam, w), s)
    if not _residual_ok((back - y).norm1(), y.norm1()):
        bad.append("A1")
    if y:
        F = eval_f(lam, w, c_x, d)
        if not _log_le(LogMagnitude.of(s.norm1()).log_abs, F.log_value + LogMagnitude.of(y.norm1()).log_abs):
            bad.append("B1")
        if not s or s.max_support() != lam.min_support() + y.max_support():
            bad.append("C1")
        lo, hi = lam.min_support() + 1, lam.min_support() + d
        if any(not lo <= n <= hi for n in s.support):
            bad.append("C1-range")
    return bad


def check_iterated(lam: SparseVec, w: WeightSeq, y: SparseVec, k: int, c_x=1) -> list[str]:
    """A2 and B2 at power ``k``."""
    bad = []
    s = apply_s_lambda_pow(lam, w, y, k)
    back = _power(lam, w, s, k)
    if not _residual_ok((back - y).norm1(), y.norm1()):
        bad.append("A2")
    d_k = right_inverse_dims(lam.min_support(), y.max_support(), k)[-1]
    F = eval_f(lam, w, c_x, d_k)
    if not _log_le(LogMagnitude.of(s.norm1()).log_abs, k * F.log_value + LogMagnitude.of(y.norm1()).log_abs):
        bad.append("B2")
    return bad


def check_oracle(lam: SparseVec, w: WeightSeq, d: int, y: SparseVec) -> list[str]:
    """Back-substitution against the cofactor inverse, plus the entry bound."""
    bad = []
    M = build_m(lam, w, d)
    inv = inv_matrix_oracle(M)
    a = y.dense(d)
    p = lam.min_support()
    via_oracle = SparseVec._trusted(
        (p + n + 1, sum((inv[n][k] * a[k] for k in range(d)), to_scalar(0))) for n in range(d)
    )
    if via_oracle != solve_right_inverse(lam, w, d, y):
        bad.append("oracle-equivalence")
    A = M.as_lists()
    for i in range(d):
        for j in range(d):
            e = sum((A[i][t] * inv[t][j] for t in range(d)), to_scalar(0))
            if e != (1 if i == j else 0):
                bad.append("oracle-inverse")
                break
    log_bound = inverse_entry_log_bound(lam, w, d)
    for row in inv:
        for v in row:
            if v != 0 and not _log_le(LogMagnitude.of(v).log_abs, log_bound):
                bad.append("entry-bound")
                return bad
    return bad


def check_det(lam: SparseVec, w: WeightSeq, d: int) -> list[str]:
    M = build_m(lam, w, d)
    p = lam.min_support()
    closed = lam.coeff(p) ** d
    for j in range(1, d + 1):
        closed = closed * w.prod(j, p + j - 1)
    perm = permutation_det(M.as_lists())
    tri = M.det()
    if get_mode() == EXACT:
        ok = perm == tri == closed
    else:
        scale = abs(closed)
        ok = abs(perm - closed) <= FLOAT_RESIDUAL * scale and abs(tri - closed) <= FLOAT_RESIDUAL * scale
    return [] if ok else ["det-identity"]


def run_lemmas(cfg: dict, w: WeightSeq, rng: random.Random) -> tuple[int, dict]:
    violations = []
    notices = []
    counts = {"A1/B1/C1": 0, "A2/B2": 0, "oracle": 0, "det": 0}
    instances = []
    for _ in range(cfg["samples"]):
        lam = random_vector(rng, rng.randint(1, cfg["max_lambda_support"]), cfg["height"])
        d = rng.randint(1, cfg["max_d"])
        y = random_vector(rng, d, cfg["height"])
        instances.append((lam, d, y))
        bad = check_right_inverse(lam, w, d, y)
        counts["A1/B1/C1"] += 1
        if bad:
            violations.append({"check": bad, "lambda": lam.to_json(), "d": d, "y": y.to_json()})
    for lam, d, y in instances[: cfg["iterated_samples"]]:
        for k in range(1, cfg["k_max"] + 1):
            bad = check_iterated(lam, w, y, k)
            counts["A2/B2"] += 1
            if bad:
                violations.append({"check": bad, "lambda": lam.to_json(), "k": k, "y": y.to_json()})
    oracle_d = cfg["oracle_max_d"]
    if oracle_d > ORACLE_MAX_D:
        notices.append(f"oracle skipped: oracle_max_d = {oracle_d} exceeds size cap {ORACLE_MAX_D}")
    elif get_mode() != EXACT:
        notices.append("oracle skipped: exact mode required")
    else:
        for i in range(cfg["oracle_samples"]):
            lam = random_vector(rng, rng.randint(1, cfg["max_lambda_support"]), cfg["height"])
            d = 1 + i % oracle_d
            y = random_vector(rng, d, cfg["height"])
            bad = check_oracle(lam, w, d, y)
            counts["oracle"] += 1
            if bad:
                violations.append({"check": bad, "lambda": lam.to_json(), "d": d, "y": y.to_json()})
    for i in range(cfg["det_samples"]):
        lam = random_vector(rng, rng.randint(1, cfg["max_lambda_support"]), cfg["height"])
        d = 1 + i % cfg["det_max_d"]
        if check_det(lam, w, d):
            violations.append({"check": ["det-identity"], "lambda": lam.to_json(), "d": d})
        counts["det"] += 1
    report = {
        "checks": counts,
        "violations": violations,
        "violation_count": len(violations),
        "notices": notices,
        "summary": f"{sum(counts.values())} checks, {len(violations)} violations",
    }
    return (EXIT_VIOLATION if violations else EXIT_OK), report


def build_family(cfg: dict) -> SeqFamily:
    gen = cfg["generator"]
    lam = SparseVec.from_json(cfg["lambda"]) if cfg.get("lambda") is not None else SparseVec()
    pert = SparseVec.from_json(cfg["perturbation"]) if cfg.get("perturbation") else SparseVec.from_dense([1])
    size = cfg.get("size", 8)
    if gen == "constant":
        return SeqFamily.constant(lam, size)
    if gen == "zero":
        return SeqFamily([pert / m for m in range(1, size + 1)], SparseVec(), "zero-limit")
    if gen == "eventually_constant":
        return SeqFamily.eventually_constant(lam, cfg.get("start", 5), pert, size)
    if gen == "harmonic":
        return SeqFamily.harmonic(lam, pert, size)
    if gen == "geometric":
        return SeqFamily.geometric(lam, pert, size=size)
    raise ValueError(f"unknown family generator {gen!r}")


def _random_alpha(rng: random.Random):
    while True:
        a = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        if a:
            return a if get_mode() == EXACT else float(a)


def run_criterion(cfg: dict, w: WeightSeq, rng: random.Random) -> tuple[int, dict, list[list]]:
    runs = []
    if cfg["combination"]["enabled"]:
        comb = cfg["combination"]
        l1 = SparseVec.from_json(comb["lambda1"])
        l2 = SparseVec.from_json(comb["lambda2"])
        for _ in range(comb["pairs"]):
            a1, a2 = _random_alpha(rng), _random_alpha(rng)
            lam = l1 * a1 + l2 * a2
            fam = SeqFamily.constant(lam, max(cfg["kmax"] + 2, 8))
            runs.append({"alpha": [_num(a1), _num(a2)], "family": fam})
    else:
        runs.append({"family": build_family(cfg["family"])})
    table = []
    out_runs = []
    codes = []
    for i, run in enumerate(runs):
        fam = run.pop("family")
        verdict = closure_supercyclic_verdict(fam, w, cfg["sample_count"], cfg["kmax"], rng)
        body = verdict.to_json()
        body.update({k: v for k, v in run.items()})
        body["generator"] = fam.generator
        out_runs.append(body)
        for s, rep in enumerate(verdict.reports):
            for row in rep.csv_rows():
                table.append([i, s] + row)
        if verdict.verdict.startswith("excluded"):
            codes.append(EXIT_EXCLUDED)
        else:
            codes.append(EXIT_OK if verdict.satisfied else EXIT_VIOLATION)
    satisfied = sum(1 for r in out_runs if r["satisfied"])
    report = {
        "runs": out_runs,
        "satisfied_runs": satisfied,
        "summary": f"{satisfied}/{len(out_runs)} runs satisfy the criterion up to kmax = {cfg['kmax']}",
    }
    if EXIT_EXCLUDED in codes:
        report["summary"] += "; U = 0 excluded"
        return EXIT_EXCLUDED, report, table
    return max(codes), report, table


def grid_targets(dim: int, count: int, rng: random.Random) -> list[SparseVec]:
    """``count`` distinct nonzero rational vectors of ``X_dim``."""
    seen = set()
    out = []
    while len(out) < count:
        v = random_vector(rng, dim, 4)
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def run_witness(cfg: dict, w: WeightSeq, targets: list[SparseVec]) -> tuple[int, dict, str, dict]:
    eps = to_scalar(cfg["eps"])
    try:
        x, plan = build_witness(w, targets, eps)
    except ModeRequirementError as exc:
        return EXIT_MODE, {"error": str(exc), "summary": str(exc)}, "", {}
    kmax = cfg.get("kmax") or x.max_support()
    trace = orbit_trace(w, x, targets, kmax)
    per_target = []
    ok = plan.check_budget()
    for tid in range(len(targets)):
        k, dist = trace.best[tid]
        per_target.append({"target_id": tid, "k": k, "dist": _num(dist), "within_eps": dist <= eps})
        ok = ok and dist <= eps
    worst = max(trace.best[t][1] for t in range(len(targets)))
    report = {
        "witness": x.to_json(),
        "targets": [t.to_json() for t in targets],
        "per_target": per_target,
        "budget_ok": plan.check_budget(),
        "max_dist": _num(worst),
        "summary": f"{len(targets)} targets, worst projective distance {float(worst):.3g} (eps {float(eps):.3g})",
    }
    return (EXIT_OK if ok else EXIT_VIOLATION), report, trace.to_csv(), plan.to_json()


def run_isometry(cfg: dict, w: WeightSeq, rng: random.Random) -> tuple[int, dict, list[list]]:
    rows = []
    bad = 0
    unweighted = isinstance(w, ConstantOne)
    lambdas = [random_vector(rng, rng.randint(1, cfg["max_support"])) for _ in range(cfg["count"])]
    if cfg.get("include_zero", True):
        lambdas.append(SparseVec())
    for i, lam in enumerate(lambdas):
        N = cfg.get("N") or (lam.max_support() if lam else 1)
        lower, upper = series_norm_bracket(OperatorSeries(lam, w), N)
        collapsed = lower == upper
        if unweighted and not collapsed:
            bad += 1
        if lower > upper:
            bad += 1
        rows.append([i, N, _num(lower), _num(upper), _num(upper - lower), collapsed])
    report = {
        "weights": w.to_json(),
        "count": len(rows),
        "collapsed": sum(1 for r in rows if r[-1]),
        "violations": bad,
        "summary": (
            f"{sum(1 for r in rows if r[-1])}/{len(rows)} brackets collapse"
            + ("" if unweighted else " (weighted: widths reported, collapse not asserted)")
        ),
    }
    return (EXIT_VIOLATION if bad else EXIT_OK), report, rows
