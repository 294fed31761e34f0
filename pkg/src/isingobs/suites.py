"""Verification suites and the campaign runner behind the command line.

Each suite takes a :class:`~isingobs.config.RunConfig` and a generator and
returns a :class:`SuiteResult`: a pass flag, a JSON-ready summary, per-check
records and plot tables. The generator of a suite is derived from the run
seed and the suite's position in :data:`~isingobs.config.SUITES`, so a suite
draws the same samples whether it runs alone, in a campaign or in a worker
process.
"""

from __future__ import annotations

import datetime
import math
import platform
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .analyticity import (
    check_recursion,
    check_S_periodicity,
    check_S_symmetry,
    random_tuples,
    recursion_samples,
    rhs_factor,
)
from .config import SUITES, RunConfig, parse_bumps, parse_list, parse_omega
from .core import Conventions, DoubleCone, Point2D, ball_inside
from .fock import (
    FockSpace,
    RapidityGrid,
    annihilator,
    assemble_observable,
    closability_sum,
    creator,
    identity,
    projector,
    qomega_norm,
)
from .formfactors import (
    EvenTerminating,
    OddTower,
    antisymmetrized_sinh_sum,
    eval_F,
    sinh_matrix,
)
from .laurent import PowerSumTower, SymmetricLaurentPolynomial, parse_polynomial
from .locality import (
    HarnessConfig,
    boundary_candidates,
    convention_arbiter,
    locality_verdict,
    reeh_schlieder_rank,
)
from .oracles import dense_assembly, permutation_matching_sum
from .pfaffian import matching_sum_abs, pfaffian
from .testfunctions import BumpFunction


@dataclass
class SuiteResult:
    name: str
    passed: bool
    summary: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    plotdata: dict = field(default_factory=dict)  # file stem -> {"columns": [...], "rows": [...]}

    def as_dict(self) -> dict:
        return {"pass": self.passed, "summary": self.summary, "records": self.records,
                "plotdata": self.plotdata}


def suite_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(SUITES.index(name),)))


# ------------------------------------------------------------------ families


def observable_family(cfg: RunConfig) -> EvenTerminating:
    sec = cfg["observable"]
    return EvenTerminating(sec.k, parse_polynomial(sec.poly, 2 * sec.k), sec.bump(), sec.r)


def tower_family(cfg: RunConfig, omega: str | None = None) -> OddTower:
    sec = cfg["tower"]
    return OddTower(PowerSumTower(sec.s), sec.bump(), sec.r, omega=parse_omega(omega or sec.omega))


def _even_member(k: int, g: BumpFunction, r: float) -> EvenTerminating:
    # a non-constant symmetric polynomial, so that symmetry checks see structure
    poly = SymmetricLaurentPolynomial(2 * k, (((1,), 1.0), ((2, -1), 0.5 + 0.2j)))
    return EvenTerminating(k, poly, g, r)


# -------------------------------------------------------------------- suites


def suite_car(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["car"]
    grid, space = RapidityGrid(sec.N, sec.theta_max), FockSpace(sec.N, sec.K)
    g = rng.normal(size=sec.N) + 1j * rng.normal(size=sec.N)
    h = rng.normal(size=sec.N) + 1j * rng.normal(size=sec.N)
    zd_h, zd_g = creator(space, grid, h), creator(space, grid, g)
    z_g, z_h = annihilator(space, grid, np.conj(g)), annihilator(space, grid, np.conj(h))
    top = sec.K - 1  # the anticommutator needs one spare sector
    Q = projector(space, top)

    def err(op):
        m = op.to_sparse()
        return float(abs(m).max()) if m.nnz else 0.0

    mixed = err((z_g @ zd_h + zd_h @ z_g).project(top) - grid.inner(g, h) * Q)
    creators = err(zd_h @ zd_g + zd_g @ zd_h)
    annihilators = err(z_g @ z_h + z_h @ z_g)
    # node level: {z_i, z_j^dagger} = delta_ij / w_i
    node = 0.0
    for i, j in ((0, 0), (0, 1), (sec.N // 2, sec.N // 2)):
        ei, ej = np.eye(sec.N)[i], np.eye(sec.N)[j]
        a = annihilator(space, grid, ei / grid.weights[i])
        c = creator(space, grid, ej / grid.weights[j])
        target = (1.0 / grid.weights[i]) if i == j else 0.0
        node = max(node, err((a @ c + c @ a).project(top) - target * Q) / max(target, 1.0))
    summary = {"N": sec.N, "K": sec.K, "mixed_error": mixed, "creator_error": creators,
               "annihilator_error": annihilators, "node_error": node, "tol": sec.tol}
    ok = max(mixed, node) < sec.tol and creators < sec.tol and annihilators < sec.tol
    return SuiteResult("car", ok, summary)


def suite_pfaffian(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["pfaffian"]
    records, worst = [], 0.0
    for n in parse_list(sec.sizes, int):
        k = n // 2
        norm = 2**k * math.factorial(k)
        for s in range(sec.samples):
            zeta = rng.normal(size=n) + 1j * rng.normal(size=n)
            lhs = complex(antisymmetrized_sinh_sum(zeta))
            M = sinh_matrix(zeta)
            rhs = norm * complex(pfaffian(M))
            # the sinh matrix has rank two: for n >= 4 both sides cancel to zero
            scale = max(abs(lhs), norm * float(matching_sum_abs(M)))
            r_sinh = abs(lhs - rhs) / scale
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            X = X - X.T
            lhs_g = permutation_matching_sum(X)
            r_gen = abs(lhs_g - norm * complex(pfaffian(X))) / abs(lhs_g)
            worst = max(worst, r_sinh, r_gen)
            records.append({"size": n, "sample": s, "sinh_residual": r_sinh, "generic_residual": r_gen})
    return SuiteResult("pfaffian", worst < sec.tol, {"max_residual": worst, "tol": sec.tol}, records)


def _analytic_families(cfg: RunConfig, sec):
    g = cfg["observable"].bump()
    r = cfg["observable"].r
    fams = [(2 * k, _even_member(k, g, r)) for k in range(1, sec.max_even // 2 + 1)]
    tower = tower_family(cfg)
    fams += [(c, tower) for c in range(1, sec.max_odd + 1, 2)]
    return fams


def _symmetry_like(name: str, cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg[name]
    records, worst = [], 0.0
    for count, fam in _analytic_families(cfg, sec):
        z = random_tuples(rng, count, sec.samples, strip=sec.strip)
        if name == "symmetry":
            res = [float(check_S_symmetry(fam, z, i).max()) for i in range(count - 1)]
        else:
            res = [float(check_S_periodicity(fam, z, s).max()) for s in range(count)]
        r = max(res, default=0.0)
        worst = max(worst, r)
        records.append({"family": fam.label(), "count": count, "samples": sec.samples, "residual": r,
                        "verdict": "pass" if r < sec.tol else "fail"})
    ok = worst < sec.tol
    summary = {"max_residual": worst, "tol": sec.tol}
    if name == "symmetry":
        # the check must be able to fail: |F| is symmetric but not S-symmetric
        tower = tower_family(cfg)
        z = random_tuples(rng, 3, sec.samples, strip=sec.strip)
        ctrl = float(check_S_symmetry(tower, z, 0, evaluator=lambda q: np.abs(eval_F(tower, q))).max())
        summary["abs_value_control"] = ctrl
        ok = ok and ctrl > sec.tol
    return SuiteResult(name, ok, summary, records)


def suite_symmetry(cfg, rng):
    return _symmetry_like("symmetry", cfg, rng)


def suite_periodicity(cfg, rng):
    return _symmetry_like("periodicity", cfg, rng)


def suite_recursion(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["recursion"]
    obs = cfg["observable"]
    tower = tower_family(cfg)
    cases = [
        (3, 1, 3, tower, sec.tol3),
        (5, 2, 5, tower, sec.tol5),
        (2, 1, 2, _even_member(1, obs.bump(), obs.r), sec.even_tol),
        (4, 1, 4, _even_member(2, obs.bump(), obs.r), sec.even_tol),
    ]
    records, rows, summary, ok = [], [], {}, True
    for k, m, n, fam, tol in cases:
        samples = recursion_samples(rng, k, sec.samples, radius=sec.radius)
        rep = check_recursion(fam, k, m, n, samples, sec.radius, sec.points)
        half = check_recursion(fam, k, m, n, samples, sec.radius / 2, sec.points)
        passed = rep.passed(tol) and half.max_residual < tol
        factor_ok = rep.rhs_factor == (0 if k % 2 == 0 else 2)
        ok = ok and passed and factor_ok
        summary[f"k{k}"] = {"family": fam.label(), "max_residual": rep.max_residual,
                            "max_residual_half_radius": half.max_residual, "stable": rep.all_stable,
                            "rhs_factor": rep.rhs_factor, "tol": tol, "pass": passed and factor_ok}
        records += rep.records
        for i, (a, b) in enumerate(zip(rep.residuals, half.residuals)):
            rows.append([k, i, sec.radius, a])
            rows.append([k, i, sec.radius / 2, b])
    plot = {"recursion_residuals": {"columns": ["k", "sample", "radius", "residual"], "rows": rows}}
    return SuiteResult("recursion", ok, summary, records, plot)


def _rows_table(report) -> dict:
    return {"columns": ["m", "term", "partial_sum", "ratio"], "rows": [list(r) for r in report.rows()]}


def suite_closability(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["closability"]
    tower = tower_family(cfg)
    grid = dict(M_max=sec.M_max, nodes=sec.nodes, theta_max=sec.theta_max)
    odd = closability_sum(tower, sec.n, tower.omega, **grid)
    ctrl = closability_sum(tower, sec.n, parse_omega(sec.control_omega), **grid)
    even_fam = observable_family(cfg)
    even_omega = parse_omega(sec.even_omega)
    evens = [closability_sum(even_fam, sec.n, even_omega, M_max=sec.M_max, nodes=nd,
                             theta_max=sec.even_theta_max) for nd in parse_list(sec.even_nodes, int)]
    even_vals = [e.partial_sums[-1] for e in evens]
    drift = max((abs(b - a) / abs(a) for a, b in zip(even_vals, even_vals[1:])), default=0.0)
    even_terms = sum(1 for t in evens[-1].terms if t)
    ratios = odd.ratios
    decreasing = len(ratios) >= 2 and all(b < a for a, b in zip(ratios, ratios[1:]))
    checks = {
        "even_converging": all(e.verdict == "converging" for e in evens),
        "even_single_term": even_terms == 1,
        "even_finite": all(math.isfinite(v) and v > 0 for v in even_vals),
        "even_refinement": drift < sec.refine_tol,
        "odd_converging": odd.verdict == "converging",
        "odd_ratios_decreasing": decreasing,
        "control_not_converging": ctrl.verdict != "converging",
    }
    summary = {
        "odd": {"omega": odd.omega, "verdict": odd.verdict, "ratios": ratios, "failures": odd.failures},
        "control": {"omega": ctrl.omega, "verdict": ctrl.verdict, "ratios": ctrl.ratios,
                    "failures": ctrl.failures},
        "even": {"omega": even_omega.label(), "values": even_vals, "nodes": parse_list(sec.even_nodes, int),
                 "relative_change": drift, "verdict": evens[-1].verdict, "note": evens[-1].note},
        "checks": checks,
    }
    plot = {"closability_odd": _rows_table(odd), "closability_control": _rows_table(ctrl),
            "closability_even": _rows_table(evens[-1])}
    return SuiteResult("closability", all(checks.values()), summary, [], plot)


def suite_qomega(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["qomega"]
    fam = observable_family(cfg)
    omega = parse_omega(sec.omega)
    rows = []
    for N in parse_list(sec.sizes, int):
        grid = RapidityGrid(N, sec.theta_max)
        A = assemble_observable(fam, FockSpace(N, sec.k), grid)
        rows.append([N, qomega_norm(A, sec.k, omega, grid)])
    vals = [v for _, v in rows]
    var = max((abs(b - a) / abs(a) for a, b in zip(vals, vals[1:])), default=0.0)
    ok = all(math.isfinite(v) for v in vals) and var < sec.variation
    summary = {"k": sec.k, "omega": omega.label(), "values": vals, "max_relative_change": var,
               "tol": sec.variation}
    return SuiteResult("qomega", ok, summary, [],
                       {"qomega_refinement": {"columns": ["N", "qomega_norm"], "rows": rows}})


def suite_locality(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["locality"]
    fam = observable_family(cfg)
    region = DoubleCone.standard(fam.r)
    left, right, controls = parse_bumps(sec.left), parse_bumps(sec.right), parse_bumps(sec.controls)
    omega = parse_omega(sec.omega)
    hc = HarnessConfig(N=sec.N, theta_max=sec.theta_max, k_cap=sec.k_cap, tau=sec.tau,
                       rho_min=sec.rho_min, margin=sec.margin)
    summary, ok = {}, True
    rows = []
    if sec.arbiter:
        rep = convention_arbiter(boundary_candidates(), fam, region, left, right, controls, omega, hc,
                                 raise_on_ambiguity=False)
        passing = [k for k, v in rep.verdicts.items() if v.passed]
        summary["arbiter"] = rep.as_dict()
        summary["passing"] = passing
        ok = len(passing) == 1
        chosen = rep.verdicts[rep.selected] if rep.selected else next(iter(rep.verdicts.values()))
        presc = next(c.presc for c in boundary_candidates() if c.label == chosen.observable)
    else:
        presc = boundary_candidates()[0].presc
        space = FockSpace(hc.N, hc.k_cap + 1)
        A = assemble_observable(fam, space, hc.grid, presc=presc)
        chosen = locality_verdict(A, region, left, right, controls, omega, hc, label=presc.variant.value)
        summary["verdict"] = chosen.as_dict()
        ok = chosen.passed
    rows = [[d, v, bool(c)] for d, v, c in chosen.separations]
    space = FockSpace(hc.N, hc.k_cap + 1)
    if sec.flipped_metric_control:
        flipped = Conventions(metric_sign=-1)
        A = assemble_observable(fam, space, hc.grid, presc=presc, conv=flipped)
        fv = locality_verdict(A, region, left, right, controls, omega, hc, conv=flipped, label="flipped-metric")
        summary["flipped_metric"] = fv.as_dict()
        ok = ok and not fv.passed
    # a multiple of the identity commutes with everything: the harness must not call it local
    deg = locality_verdict(identity(space), region, left, right, controls, None, hc, label="identity")
    summary["identity_status"] = deg.status
    ok = ok and deg.status == "inconclusive"
    plot = {"locality_separation": {"columns": ["separation", "rel_comm_norm", "is_control"], "rows": rows}}
    return SuiteResult("locality", ok, summary, [], plot)


def _random_bump(rng, r):
    region = DoubleCone.standard(r)
    while True:
        c = Point2D(*rng.uniform(-0.2, 0.2, 2))
        rad = rng.uniform(0.1, 0.2)
        if ball_inside(region, c, rad):
            return BumpFunction(c, rad)


def _random_poly(rng, nvars):
    if nvars == 0:
        return SymmetricLaurentPolynomial.constant(0, complex(*rng.normal(size=2)))
    terms = tuple(((int(rng.integers(-2, 3)), int(rng.integers(-2, 3))), complex(*rng.normal(size=2)))
                  for _ in range(2))
    return SymmetricLaurentPolynomial(nvars, terms)


def suite_reeh_schlieder(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["reeh-schlieder"]
    evens = []
    for i in range(sec.even):
        k = 0 if i % 10 == 0 else 1  # a few scalar members reach the vacuum sector
        evens.append(EvenTerminating(k, _random_poly(rng, 2 * k), _random_bump(rng, sec.r), sec.r))
    odds = [OddTower(PowerSumTower(int(rng.integers(0, 3))), _random_bump(rng, sec.r), sec.r)
            for _ in range(sec.odd)]
    grid = RapidityGrid(sec.N, sec.theta_max)
    a = reeh_schlieder_rank(evens, grid, sec.K, sec.r, sec.threshold)
    b = reeh_schlieder_rank(evens + odds, grid, sec.K, sec.r, sec.threshold)
    odd_rank = sum(v for k, v in b.sector_ranks.items() if k % 2)
    checks = {"even_full_rank": a.rank == a.reachable_dim, "odd_increase": b.rank > a.rank and odd_rank > 0}
    summary = {"even": a.as_dict(), "combined": b.as_dict(), "checks": checks}
    rows = [[i, s] for i, s in enumerate(b.singular_values)]
    return SuiteResult("reeh-schlieder", all(checks.values()), summary, [],
                       {"gram_spectrum": {"columns": ["index", "eigenvalue"], "rows": rows}})


def suite_assembly(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    sec = cfg["assembly"]
    obs = cfg["observable"]
    g = BumpFunction(Point2D(0.02, 0.05), 0.25)
    even = _even_member(1, g, obs.r)
    odd = OddTower(PowerSumTower(cfg["tower"].s), g, obs.r)
    cases = [(even, sec.N, K) for K in range(1, sec.K + 1)]
    cases += [(odd, sec.N, min(2, sec.K)), (odd, sec.odd_N, sec.K)]
    records, worst = [], 0.0
    for fam, N, K in cases:
        grid = RapidityGrid(N, sec.theta_max)
        A = assemble_observable(fam, FockSpace(N, K), grid)
        ref = dense_assembly(fam, N, K, grid)
        err = max(float(np.abs(A.block(*key) - blk).max(initial=0.0)) for key, blk in ref.items())
        scale = max(float(np.abs(blk).max(initial=0.0)) for blk in ref.values())
        worst = max(worst, err)
        records.append({"family": fam.label(), "N": N, "K": K, "max_abs_error": err, "block_scale": scale})
    return SuiteResult("assembly", worst < sec.tol, {"max_abs_error": worst, "tol": sec.tol}, records)


SUITE_FUNCS = {
    "car": suite_car,
    "pfaffian": suite_pfaffian,
    "symmetry": suite_symmetry,
    "periodicity": suite_periodicity,
    "recursion": suite_recursion,
    "closability": suite_closability,
    "qomega": suite_qomega,
    "locality": suite_locality,
    "reeh-schlieder": suite_reeh_schlieder,
    "assembly": suite_assembly,
}


# -------------------------------------------------------------------- runner


def clean(obj):
    """Plain JSON types; non-finite floats become the strings ``nan``/``inf``/``-inf``."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def run_one(name: str, cfg: RunConfig, seed: int) -> tuple[str, dict, float]:
    """Run a suite; an unexpected exception becomes an ``error`` entry."""
    t0 = time.perf_counter()
    try:
        res = SUITE_FUNCS[name](cfg, suite_rng(seed, name))
        out = res.as_dict()
        out["status"] = "pass" if res.passed else "fail"
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        out = {"pass": False, "status": "error", "error": f"{type(exc).__name__}: {exc}",
               "traceback": traceback.format_exc().splitlines()[-6:]}
    return name, clean(out), time.perf_counter() - t0


def environment_stamp(runtimes: dict) -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "isingobs": __version__,
        "platform": platform.platform(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "runtimes_s": {k: round(v, 3) for k, v in runtimes.items()},
    }


def run_campaign(cfg: RunConfig, suites, seed: int | None = None, jobs: int = 1, progress=None) -> dict:
    """Run ``suites`` (canonical order) and assemble the report."""
    seed = cfg.run.seed if seed is None else seed
    order = [s for s in SUITES if s in set(suites)]
    results, runtimes = {}, {}
    if jobs > 1 and len(order) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_one, s, cfg, seed) for s in order]
            for fut in futures:
                name, out, dt = fut.result()
                results[name], runtimes[name] = out, dt
                if progress:
                    progress(name, out["status"], dt)
    else:
        for s in order:
            name, out, dt = run_one(s, cfg, seed)
            results[name], runtimes[name] = out, dt
            if progress:
                progress(name, out["status"], dt)
    return {
        "config_hash": cfg.digest(),
        "config_source": cfg.source,
        "seed": seed,
        "suites": {s: results[s] for s in order},
        "passed": all(r["pass"] for r in results.values()),
        "environment": environment_stamp(runtimes),
    }


def strip_environment(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "environment"}
