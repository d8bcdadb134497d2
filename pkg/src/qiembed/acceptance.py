"""The twelve acceptance criteria as runnable checks.

Each criterion returns a ``CheckRecord`` whose measured values depend only
on the seed, so reports are byte-identical across reruns.  Wall-clock
times are measured by ``run_acceptance`` but kept out of the records.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import exact
from .arrangements import (build_irreducible, equation_normals, hyperplane_count, parse_label, restrict,
                           subspace_from_equations, subspace_from_normals)
from .building import BallOracle, comb_distance, stratified_pairs
from .lemmas import check_type_a_restrictions, d_chain
from .nonrigid_building import (NonrigidConfigP, TreeFlat, common_frame_test as common_frame_test_p,
                                estimate_flags as estimate_flags_p, nonrigid_flat_report_p)
from .nonrigid_sym import NonrigidConfig, nonrigid_report
from .oracles import positive_root_count, supported_types
from .patterns import factor_image, search_preservers
from .qifit import check_qi, fit_qi_constants
from .report import CheckRecord, QieReport
from .symspace import (BOUNDARY_POINTS, PAIRING, HPoint, an_map_rep, asymptote_distance, dist_h,
                       dist_sym_batch, sample_an_map_pairs, vertical_flat_residual, wall_crossings)

# equal-dimension pairs drawn from this corpus are searched exhaustively
DECLARED_CORPUS = ("A1", "A2", "A3", "BC2", "G2", "A1xA1", "A1xA2", "A2xA2", "BC2xA1", "A1xA1xA1")
NONEXISTENCE_PAIRS = (("A2", "A1xA1"), ("G2", "A1xA1"), ("G2", "A2"), ("BC2", "A2"), ("D4", "A4"))
D4_RESTRICTED = ("x1=0", "x1=x3", "x1=-x3", "x1=x4", "x1=-x4", "x3=x4", "x3=-x4")


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, k])


def _subseed(seed: int, k: int) -> int:
    return int(_rng(seed, k).integers(2 ** 31))


# -- exact combinatorics ---------------------------------------------------------------

def criterion_hyperplane_counts(seed: int) -> CheckRecord:
    g2 = hyperplane_count(parse_label("G2"))
    a1a1 = hyperplane_count(parse_label("A1xA1"))
    mismatches = [f"{t}{r}" for t, r in supported_types()
                  if hyperplane_count(build_irreducible(t, r)) != positive_root_count(t, r)]
    return CheckRecord("hyperplane counts", g2 == 6 and a1a1 == 2 and not mismatches,
                       {"G2": g2, "A1xA1": a1a1, "types_checked": len(supported_types()),
                        "oracle_mismatches": mismatches},
                       {"G2": 6, "A1xA1": 2, "max_rank": 8})


def _pullback(d4, sub, normal):
    """Ambient singular subspace of a restricted hyperplane given in subspace coordinates."""
    null = exact.nullspace([list(normal)])
    vecs = [[sum((c * b[k] for c, b in zip(v, sub.basis)), Fraction(0)) for k in range(d4.ambient_dim)]
            for v in null]
    return subspace_from_normals(d4, [g.normal for g in d4.hyperplanes
                                      if all(exact.dot(g.normal, x) == 0 for x in vecs)]).basis


def criterion_d4_restriction(seed: int) -> CheckRecord:
    d4 = build_irreducible("D", 4)
    sub = subspace_from_equations(d4, "x1=x2")
    rest = restrict(d4, sub)
    base = list(equation_normals(d4, "x1=x2"))
    expected = {subspace_from_normals(d4, list(equation_normals(d4, eq)) + base).basis for eq in D4_RESTRICTED}
    got = {_pullback(d4, sub, h.normal) for h in rest.hyperplanes}
    count = hyperplane_count(rest)
    return CheckRecord("D4 restricted to x1=x2", count == 7 and got == expected,
                       {"restricted_count": count, "matches_listed_hyperplanes": got == expected},
                       {"restricted_count": 7})


def criterion_type_a_correspondence(seed: int) -> CheckRecord:
    checked, failures = 0, []
    for n in range(2, 9):
        try:
            checked += len(check_type_a_restrictions(n))
        except AssertionError as e:
            failures.append(str(e))
    return CheckRecord("type A restriction correspondence", not failures,
                       {"hyperplanes_checked": checked, "failures": failures}, {"n_range": [2, 8]})


def criterion_d_chains(seed: int) -> CheckRecord:
    targets = [("D", n) for n in range(4, 9)] + [("BC", n) for n in range(3, 7)] + [("F4", 4)]
    levels, bad = {}, []
    for tag, r in targets:
        w = d_chain(build_irreducible(tag, r))
        label = f"{tag}{r}" if tag != "F4" else tag
        levels[label] = [[lv.dim, lv.restricted_count, lv.d_count] for lv in w.levels]
        nested = all(nxt.subspace.contains_vector(b)
                     for prev, nxt in zip(w.levels, w.levels[1:]) for b in prev.subspace.basis)
        if not (nested and [lv.dim for lv in w.levels] == list(range(2, r))
                and all(lv.restricted_count > lv.d_count for lv in w.levels)):
            bad.append(label)
    return CheckRecord("D-pattern chains with strict excess", not bad,
                       {"levels": levels, "failures": bad}, {"excess": "strict at every level"})


def criterion_factor_images(seed: int) -> CheckRecord:
    pairs = [(x, y) for x in DECLARED_CORPUS for y in DECLARED_CORPUS
             if parse_label(x).ambient_dim == parse_label(y).ambient_dim]
    n_certs, violations, not_exhaustive = 0, [], []
    for src, dst in pairs:
        a, b = parse_label(src), parse_label(dst)
        res = search_preservers(a, b)
        if not res.exhaustive:
            not_exhaustive.append(f"{src}->{dst}")
        for cert in res:
            n_certs += 1
            if not factor_image(cert.map, a, b).total:
                violations.append(f"{src}->{dst}")
    return CheckRecord("total factor images in low rank", not violations and not not_exhaustive,
                       {"pairs": len(pairs), "certificates": n_certs, "violations": violations,
                        "non_exhaustive": not_exhaustive},
                       {"violations": 0, "max_rank": 4})


def criterion_nonexistence(seed: int) -> CheckRecord:
    out = {}
    for src, dst in NONEXISTENCE_PAIRS:
        res = search_preservers(parse_label(src), parse_label(dst))
        out[f"{src}->{dst}"] = {"certificates": len(res), "exhaustive": res.exhaustive}
    ok = all(v["certificates"] == 0 and v["exhaustive"] for v in out.values())
    return CheckRecord("nonexistence certificates", ok, out, {"certificates": 0, "exhaustive": True})


# -- symmetric spaces -------------------------------------------------------------------

def criterion_vertical_flat(seed: int) -> CheckRecord:
    rng = _rng(seed, 7)
    ts = np.linspace(-5, 5, 10)
    residual = max(vertical_flat_residual(x0, z0, ts, ts) for x0, z0 in rng.uniform(-3, 3, (10, 2)))
    crossings = wall_crossings()
    return CheckRecord("AN-map vertical flat identity", residual <= 1e-9 and crossings == 1,
                       {"max_residual": residual, "grid_points": 1000, "wall_crossings": crossings},
                       {"max_residual": 1e-9, "wall_crossings": 1})


def criterion_qi_constants(seed: int) -> CheckRecord:
    rng = _rng(seed, 8)
    train = sample_an_map_pairs(rng, 10_000)
    held = sample_an_map_pairs(rng, 10_000)
    fit = fit_qi_constants(train.pairs)
    chk = check_qi(held.pairs, fit.L, fit.C)
    return CheckRecord("QI constants of the AN-map", fit.L <= 2.5 and fit.C <= 10 and chk.ok,
                       {"L": fit.L, "C": fit.C, "held_out_violations": chk.violations},
                       {"L": 2.5, "C": 10, "held_out_violations": 0, "box": 5})


def criterion_projection_isometry(seed: int) -> CheckRecord:
    rng = _rng(seed, 9)
    worst, converged = {}, True
    for label, xi in sorted(BOUNDARY_POINTS.items()):
        factor = 0 if PAIRING[label] == "first" else 2
        w = 0.0
        for _ in range(100):
            a, b = rng.uniform(-2, 2, (2, 4))
            ref = dist_h(HPoint(a[factor], a[factor + 1]), HPoint(b[factor], b[factor + 1]))
            res = asymptote_distance(an_map_rep(*a), an_map_rep(*b), xi, horizon=40.0)
            w = max(w, abs(res.value - ref))
            converged &= res.converged
        worst[label] = w
    return CheckRecord("projection isometry", converged and max(worst.values()) <= 1e-3,
                       {"max_error": worst, "plateau_converged": converged, "pairs_per_factor": 100},
                       {"max_error": 1e-3, "horizon": 40.0})


def criterion_nonrigid_continuous(seed: int) -> CheckRecord:
    reports = [r.to_dict() for r in nonrigid_report(5, seed=_subseed(seed, 10), config=NonrigidConfig())]
    ok = all(r["n_distinct_flags"] >= 7 and not r["common_frame"] and r["margin_certified"] >= 0.1
             and r["slope"] >= 0.05 for r in reports)
    return CheckRecord("non-rigid continuous example", ok, {"flats": reports},
                       {"n_distinct_flags": 7, "margin_rad": 0.1, "slope": 0.05,
                        "radii": list(NonrigidConfig().radii)})


# -- buildings ------------------------------------------------------------------------

def discrete_flats(seed: int, n: int = 5) -> list:
    rng = _rng(seed, 11)
    return [TreeFlat.through_basepoints()] + [TreeFlat.random(rng) for _ in range(n - 1)]


def criterion_nonrigid_discrete(seed: int) -> CheckRecord:
    config = NonrigidConfigP()
    reports = [nonrigid_flat_report_p(f, config, seed=_subseed(seed, 11) + k).to_dict()
               for k, f in enumerate(discrete_flats(seed))]
    control = common_frame_test_p(estimate_flags_p(TreeFlat.vertical(), config.flag_radius, "plain"),
                                  config.flag_depth)
    ok = control.common and all(
        not r["common_frame"]
        and all(x["sector_hausdorff"] <= config.sector_bound for x in r["radii"])
        and all(x["best_apartment_distance"] >= config.apartment_ratio * x["radius"] for x in r["radii"])
        for r in reports)
    return CheckRecord("non-rigid discrete example", ok,
                       {"flats": reports, "control_common_frame": control.common},
                       {"sector_hausdorff": config.sector_bound,
                        "apartment_ratio": config.apartment_ratio, "radii": list(config.radii)})


def _random_sym_reps(rng, k: int) -> np.ndarray:
    m = np.triu(rng.normal(size=(k, 3, 3)), 1)
    d = np.exp(rng.normal(size=(k, 3)))
    m[:, np.arange(3), np.arange(3)] = d / np.cbrt(d.prod(axis=1))[:, None]
    return m


def criterion_consistency_fuzz(seed: int) -> CheckRecord:
    rng = _rng(seed, 12)
    a, b, c = (_random_sym_reps(rng, 10_000) for _ in range(3))
    excess = dist_sym_batch(a, c) - dist_sym_batch(a, b) - dist_sym_batch(b, c)
    tri_fail = int(np.sum(excess > 1e-9))
    oracle = BallOracle(radius=6)
    pairs = stratified_pairs(rng, 200)
    mismatches, hist = 0, [0] * 11
    for l1, l2 in pairs:
        d = comb_distance(l1, l2)
        hist[d] += 1
        mismatches += oracle.distance(l1, l2, cap=12) != d
    return CheckRecord("metric and combinatorial consistency", tri_fail == 0 and mismatches == 0,
                       {"triangle_triples": 10_000, "triangle_failures": tri_fail,
                        "max_triangle_excess": float(excess.max()), "bfs_pairs": len(pairs),
                        "bfs_mismatches": mismatches, "comb_histogram": hist},
                       {"triangle_slack": 1e-9, "bfs_mismatches": 0})


@dataclass(frozen=True)
class Criterion:
    number: int
    budget_s: float
    run: Callable[[int], CheckRecord]


CRITERIA = (
    Criterion(1, 1.0, criterion_hyperplane_counts),
    Criterion(2, 1.0, criterion_d4_restriction),
    Criterion(3, 5.0, criterion_type_a_correspondence),
    Criterion(4, 10.0, criterion_d_chains),
    Criterion(5, 60.0, criterion_factor_images),
    Criterion(6, 60.0, criterion_nonexistence),
    Criterion(7, 5.0, criterion_vertical_flat),
    Criterion(8, 30.0, criterion_qi_constants),
    Criterion(9, 60.0, criterion_projection_isometry),
    Criterion(10, 300.0, criterion_nonrigid_continuous),
    Criterion(11, 300.0, criterion_nonrigid_discrete),
    Criterion(12, 120.0, criterion_consistency_fuzz),
)


@dataclass(frozen=True)
class CriterionOutcome:
    criterion: Criterion
    record: CheckRecord
    elapsed_s: float

    @property
    def in_budget(self) -> bool:
        return self.elapsed_s < self.criterion.budget_s

    @property
    def passed(self) -> bool:
        return self.record.passed and self.in_budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        note = "" if self.in_budget else " (over time budget)"
        return (f"[{status}] {self.record.name}: "
                f"{self.elapsed_s:.2f}s / {self.criterion.budget_s:g}s{note}")


def run_criterion(c: Criterion, seed: int) -> CriterionOutcome:
    t0 = time.perf_counter()
    rec = c.run(seed)
    elapsed = time.perf_counter() - t0
    rec.name = f"{c.number:02d} {rec.name}"
    rec.tolerances = {**rec.tolerances, "time_budget_s": c.budget_s}
    return CriterionOutcome(c, rec, elapsed)


def run_acceptance(seed: int, only=None, echo: Callable[[str], None] | None = None) -> list:
    outcomes = []
    for c in CRITERIA:
        if only is not None and c.number not in only:
            continue
        out = run_criterion(c, seed)
        if echo is not None:
            echo(out.line())
        outcomes.append(out)
    return outcomes


def acceptance_report(seed: int, outcomes: list) -> QieReport:
    return QieReport("suite acceptance", seed, {"criteria": [o.criterion.number for o in outcomes]},
                     checks=[o.record for o in outcomes])
