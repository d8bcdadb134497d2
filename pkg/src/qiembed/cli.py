"""Command-line runner: ``qie <group> <action> [options]``.

Every invocation writes a QieReport JSON document (plus CSV tables where
the verb produces samples) to the output directory and prints a one-line
summary per check.  Exit status is 0 when every check passes, 1 when a
check fails and 2 on usage or configuration errors.

Configuration precedence is: command-line flags, then the ``--config``
JSON file, then built-in defaults.  The output directory defaults to the
``QIE_OUTPUT_DIR`` environment variable, falling back to ``qie-output``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import acceptance, arrangements, exact
from .building import (CAT0_COMB_LOWER, CAT0_COMB_UPPER, BfsCapExceeded, TreeVertex, an_map_p, base_class,
                       cat0_distance, comb_distance, comb_distance_bfs, lattice_normal_form, phi_distortion_pairs,
                       qi_self_embedding_tree, relative_position, tree_ball)
from .nonrigid_building import (NonrigidConfigP, TreeFlat, common_frame_test as common_frame_test_p,
                                estimate_flags as estimate_flags_p, nonrigid_flat_report_p)
from .nonrigid_sym import NonrigidConfig, nonrigid_report
from .oracles import positive_root_count, supported_types
from .patterns import (SearchConfig, enumerate_symmetry_preservers, factor_image, is_pattern_preserving,
                       scaling_classes, search_preservers)
from .qifit import check_qi, fit_qi_constants
from .report import CheckRecord, QieReport
from .symspace import (BOUNDARY_POINTS, PAIRING, HPoint, an_map_rep, asymptote_distance, dist_h,
                       dist_sym, projection, sample_an_map_pairs, vertical_flat_residual, wall_crossings)

ENV_OUTPUT_DIR = "QIE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "qie-output"
PHI_BOUNDS = {"L": 3.0, "C": 8.0}


class UsageError(Exception):
    """Invalid configuration; reported with exit status 2."""


# -- configuration ---------------------------------------------------------------------

# per-verb numeric budgets; all must be positive
BUDGETS = {
    "pattern count": {"max_rank": 8},
    "maps search": {"rank_cap": 4},
    "maps enumerate": {"rank_cap": 4},
    "anmap eval": {"horizon": 40.0, "tol": 1e-3},
    "anmap fit": {"samples": 10_000, "held_out": 10_000, "box": 5.0, "max_L": 2.5, "max_C": 10.0},
    "anmap flat": {"radius": 5.0, "grid": 10, "tol": 1e-9},
    "anmap nonrigid": {"flats": 5, "radii": [5.0, 10.0, 20.0, 40.0], "margin": 0.1, "slope": 0.05},
    "building dist": {"cap": 10},
    "building phi": {"radius": 10},
    "building nonrigid": {"flats": 5, "radii": [16, 32, 64, 128], "sector_bound": 8, "apartment_ratio": 0.1},
    "suite acceptance": {},
}
SAMPLING_VERBS = {"maps enumerate", "anmap fit", "anmap nonrigid", "building nonrigid", "suite acceptance"}


@dataclass
class ExperimentConfig:
    verb: str
    seed: int | None
    budgets: dict
    inputs: dict = field(default_factory=dict)
    out_dir: Path = Path(DEFAULT_OUTPUT_DIR)

    def validate(self) -> "ExperimentConfig":
        if self.verb in SAMPLING_VERBS and self.seed is None:
            raise UsageError(f"'{self.verb}' samples randomly and needs --seed")
        if self.seed is not None and not (-2 ** 63 <= self.seed < 2 ** 64):
            raise UsageError("seed must be a 64-bit integer")
        for k, v in self.budgets.items():
            vals = v if isinstance(v, list) else [v]
            if not vals or any(isinstance(x, bool) or not isinstance(x, (int, float)) or x <= 0 for x in vals):
                raise UsageError(f"budget {k!r} must be positive, got {v!r}")
        return self


def _coerce_budget(name, default, value):
    try:
        if isinstance(default, list):
            items = value if isinstance(value, list) else str(value).split(",")
            kind = type(default[0])
            return [kind(float(x)) if kind is int else float(x) for x in items]
        if isinstance(default, int):
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"budget {name!r} has an invalid value {value!r}") from None


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    verb = f"{args.group} {args.action}"
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config file {args.config}: {e}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
    defaults = BUDGETS.get(verb, {})
    file_budgets = file_cfg.get("budgets", {})
    unknown = set(file_budgets) - set(defaults)
    if unknown:
        raise UsageError(f"unknown budgets for '{verb}': {sorted(unknown)}")
    budgets = {}
    for name, default in defaults.items():
        value = getattr(args, name, None)
        if value is None:
            value = file_budgets.get(name, default)
        budgets[name] = _coerce_budget(name, default, value)
    seed = args.seed if args.seed is not None else file_cfg.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise UsageError("seed must be an integer")
    inputs = dict(file_cfg.get("inputs", {}))
    for name in INPUTS.get(verb, ()):
        value = getattr(args, name, None)
        if value is not None:
            inputs[name] = value
    out = args.out or file_cfg.get("out") or os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR
    return ExperimentConfig(verb, seed, budgets, inputs, Path(out)).validate()


# -- input parsing ---------------------------------------------------------------------

def _arrangement(inputs, prefix=""):
    label = inputs.get(f"{prefix}label")
    if label:
        return arrangements.parse_label(label)
    t, r = inputs.get(f"{prefix}type"), inputs.get(f"{prefix}rank")
    if t is None or r is None:
        raise UsageError("give --label or both --type and --rank")
    return arrangements.build_irreducible(t, int(r))


def _floats(text, n, name):
    try:
        vals = [float(x) for x in str(text).split(",")]
    except ValueError:
        raise UsageError(f"--{name} expects {n} comma-separated numbers") from None
    if len(vals) != n:
        raise UsageError(f"--{name} expects {n} comma-separated numbers")
    return vals


def _matrix(text, name):
    try:
        rows = json.loads(text)
        return [[exact.frac(x) for x in row] for row in rows]
    except (json.JSONDecodeError, TypeError, ValueError, ZeroDivisionError):
        raise UsageError(f"--{name} expects a JSON matrix such as [[1, \"1/2\"], [0, 1]]") from None


def _tree_vertex(text, p, name):
    parts = str(text).split(",")
    try:
        return TreeVertex(int(parts[0]), Fraction(parts[1]) if len(parts) > 1 else Fraction(0), p)
    except (ValueError, ZeroDivisionError, IndexError):
        raise UsageError(f"--{name} expects 'm,x' with integer level m and dyadic x") from None


def _fmt_matrix(m):
    return [[exact.fmt(x) for x in row] for row in m]


# -- pattern verbs ---------------------------------------------------------------------

def run_pattern_build(cfg):
    arr = _arrangement(cfg.inputs)
    count = arrangements.hyperplane_count(arr)
    oracle = sum(positive_root_count(f.type_tag, f.rank) for f in arr.factors)
    rep = QieReport(cfg.verb, cfg.seed, cfg.budgets,
                    [CheckRecord("hyperplane count matches root oracle", count == oracle,
                                 {"hyperplane_count": count}, {"oracle": oracle})],
                    {"label": arr.label(), "hyperplane_count": count, "arrangement": arrangements.to_dict(arr)})
    rep.csv_tables["hyperplanes"] = ([f"x{i + 1}" for i in range(arr.ambient_dim)],
                                     [list(h.normal) for h in arr.hyperplanes])
    return rep


def run_pattern_restrict(cfg):
    arr = _arrangement(cfg.inputs)
    eq = cfg.inputs.get("hyperplane")
    if not eq:
        raise UsageError("--hyperplane is required, e.g. --hyperplane \"x1=x2\"")
    try:
        sub = arrangements.subspace_from_equations(arr, eq)
        rest = arrangements.restrict(arr, sub)
    except ValueError as e:
        raise UsageError(str(e)) from None
    count = arrangements.hyperplane_count(rest)
    checks = [CheckRecord("subspace is singular", arrangements.is_singular(arr, sub),
                          {"subspace_dim": sub.dim}, {})]
    if cfg.inputs.get("expect") is not None:
        checks.append(CheckRecord("restricted count", count == int(cfg.inputs["expect"]),
                                  {"restricted_count": count}, {"expected": int(cfg.inputs["expect"])}))
    rep = QieReport(cfg.verb, cfg.seed, cfg.budgets, checks,
                    {"label": arr.label(), "subspace": eq, "restricted_count": count,
                     "subspace_basis": _fmt_matrix(sub.basis),
                     "restricted_hyperplanes": [list(h.normal) for h in rest.hyperplanes]})
    rep.csv_tables["restricted"] = ([f"c{i + 1}" for i in range(rest.ambient_dim)],
                                    [list(h.normal) for h in rest.hyperplanes])
    return rep


def run_pattern_count(cfg):
    if cfg.inputs.get("type") or cfg.inputs.get("label"):
        arr = _arrangement(cfg.inputs)
        rows = [(arr.label(), arr.ambient_dim, arrangements.hyperplane_count(arr),
                 sum(positive_root_count(f.type_tag, f.rank) for f in arr.factors))]
    else:
        rows = []
        for t, r in supported_types(int(cfg.budgets["max_rank"])):
            arr = arrangements.build_irreducible(t, r)
            rows.append((arr.label(), r, arrangements.hyperplane_count(arr), positive_root_count(t, r)))
    bad = [r[0] for r in rows if r[2] != r[3]]
    rep = QieReport(cfg.verb, cfg.seed, cfg.budgets,
                    [CheckRecord("counts match root oracle", not bad, {"types": len(rows), "mismatches": bad}, {})],
                    {"counts": {r[0]: r[2] for r in rows}})
    rep.csv_tables["counts"] = (["label", "rank", "hyperplanes", "oracle"], rows)
    return rep


# -- maps verbs ------------------------------------------------------------------------

def run_maps_check(cfg):
    src, dst = _arrangement(cfg.inputs, "src_"), _arrangement(cfg.inputs, "dst_")
    if not cfg.inputs.get("matrix"):
        raise UsageError("--matrix is required")
    m = _matrix(cfg.inputs["matrix"], "matrix")
    try:
        dec = is_pattern_preserving(m, src, dst)
    except ValueError as e:
        raise UsageError(str(e)) from None
    results = {"preserving": dec.preserving, "first_failure": dec.failed}
    checks = [CheckRecord("pattern preserving", dec.preserving, {"first_failure": dec.failed}, {})]
    if dec.preserving:
        fi = factor_image(m, src, dst)
        results["factor_image"] = {str(k): v for k, v in sorted(fi.mapping.items())}
        checks.append(CheckRecord("factor image is total", fi.total, {"violations": list(fi.violations)}, {}))
    return QieReport(cfg.verb, cfg.seed, cfg.budgets, checks, results)


def run_maps_search(cfg):
    src, dst = _arrangement(cfg.inputs, "src_"), _arrangement(cfg.inputs, "dst_")
    sc = SearchConfig(rank_cap=int(cfg.budgets["rank_cap"]), injective=bool(cfg.inputs.get("injective")),
                      seed=cfg.seed or 0)
    try:
        res = search_preservers(src, dst, sc)
    except ValueError as e:
        raise UsageError(str(e)) from None
    certs = [c.to_dict() for c in res]
    violations = []
    if src.ambient_dim == dst.ambient_dim:
        violations = [i for i, c in enumerate(res) if not factor_image(c.map, src, dst).total]
    return QieReport(cfg.verb, cfg.seed, cfg.budgets,
                     [CheckRecord("search is exhaustive", res.exhaustive, {"nodes": res.nodes}, {}),
                      CheckRecord("certificates have total factor images", not violations,
                                  {"violations": violations}, {})],
                     {"src": src.label(), "dst": dst.label(), "mode": res.mode, "exhaustive": res.exhaustive,
                      "certificates": certs})


def run_maps_enumerate(cfg):
    arr = _arrangement(cfg.inputs)
    maps = enumerate_symmetry_preservers(arr, seed=cfg.seed)
    results = {"label": arr.label(), "count": len(maps), "maps": [_fmt_matrix(m.matrix) for m in maps]}
    checks = [CheckRecord("all symmetry maps preserve the pattern",
                          all(is_pattern_preserving(m, arr, arr) for m in maps), {"count": len(maps)}, {})]
    if arr.ambient_dim <= cfg.budgets["rank_cap"]:
        found = {c.map.matrix for c in search_preservers(arr, arr, SearchConfig(rank_cap=int(cfg.budgets["rank_cap"])))}
        classes = scaling_classes(maps, arr)
        missing = [c for c in classes if c not in found]
        results["search_count"] = len(found)
        checks.append(CheckRecord("exhaustive search finds every symmetry class", not missing,
                                  {"symmetry_classes": len(classes), "search_certificates": len(found),
                                   "missing": len(missing)}, {}))
    return QieReport(cfg.verb, cfg.seed, cfg.budgets, checks, results)


# -- anmap verbs -----------------------------------------------------------------------

def _xi_for_factor(factor: str):
    return next(BOUNDARY_POINTS[k] for k in sorted(BOUNDARY_POINTS) if PAIRING[k] == factor)


def run_anmap_eval(cfg):
    if not cfg.inputs.get("point"):
        raise UsageError("--point t,x,s,z is required")
    a = _floats(cfg.inputs["point"], 4, "point")
    rep_a = an_map_rep(*a)
    results = {"point": a, "image": rep_a.tolist(),
               "projections": {k: [projection(rep_a, xi).t, projection(rep_a, xi).x]
                               for k, xi in sorted(BOUNDARY_POINTS.items())}}
    checks = []
    if cfg.inputs.get("other"):
        b = _floats(cfg.inputs["other"], 4, "other")
        rep_b = an_map_rep(*b)
        d1, d2 = dist_h(HPoint(a[0], a[1]), HPoint(b[0], b[1])), dist_h(HPoint(a[2], a[3]), HPoint(b[2], b[3]))
        results.update({"other": b, "d_src": float(np.hypot(d1, d2)), "d_dst": dist_sym(rep_a, rep_b)})
        for factor, ref in (("first", d1), ("second", d2)):
            xi = _xi_for_factor(factor)
            res = asymptote_distance(rep_a, rep_b, xi, horizon=cfg.budgets["horizon"])
            checks.append(CheckRecord(f"asymptote distance equals {factor} factor distance",
                                      res.converged and abs(res.value - ref) <= cfg.budgets["tol"],
                                      {"d_xi": res.value, "d_factor": ref, "converged": res.converged},
                                      {"tol": cfg.budgets["tol"], "horizon": cfg.budgets["horizon"]}))
    return QieReport(cfg.verb, cfg.seed, cfg.budgets, checks, results)


def run_anmap_fit(cfg):
    b = cfg.budgets
    rng = np.random.default_rng(cfg.seed)
    train = sample_an_map_pairs(rng, int(b["samples"]), b["box"])
    held = sample_an_map_pairs(rng, int(b["held_out"]), b["box"])
    fit = fit_qi_constants(train.pairs)
    chk = check_qi(held.pairs, fit.L, fit.C)
    rep = QieReport(cfg.verb, cfg.seed, b,
                    [CheckRecord("fitted constants within bounds", fit.L <= b["max_L"] and fit.C <= b["max_C"],
                                 {"L": fit.L, "C": fit.C}, {"L": b["max_L"], "C": b["max_C"]}),
                     CheckRecord("held-out pairs satisfy both inequalities", chk.ok,
                                 {"violations": chk.violations, "max_excess": chk.max_excess}, {"violations": 0})],
                    {"fit": fit.to_dict()}, fitted_constants={"L": fit.L, "C": fit.C})
    cols = ["t", "s", "x", "z", "t_q", "s_q", "x_q", "z_q", "d_src", "d_dst"]
    rows = [[p[0], p[2], p[1], p[3], q[0], q[2], q[1], q[3], ds, dd]
            for p, q, ds, dd in zip(train.p, train.q, train.d_src, train.d_dst)]
    rep.csv_tables["samples"] = (cols, rows)
    return rep


def run_anmap_flat(cfg):
    b = cfg.budgets
    x0, z0 = float(cfg.inputs.get("x0", 0.0)), float(cfg.inputs.get("z0", 0.0))
    ts = np.linspace(-b["radius"], b["radius"], int(b["grid"]))
    res = vertical_flat_residual(x0, z0, ts, ts)
    wc = wall_crossings()
    return QieReport(cfg.verb, cfg.seed, b,
                     [CheckRecord("vertical flat maps onto a flat", res <= b["tol"], {"max_residual": res},
                                  {"tol": b["tol"]}),
                      CheckRecord("one wall crossing per quadrant", wc == 1, {"wall_crossings": wc}, {"expected": 1})],
                     {"x0": x0, "z0": z0, "grid_points": len(ts) ** 2})


def run_anmap_nonrigid(cfg):
    b = cfg.budgets
    config = NonrigidConfig(radii=tuple(b["radii"]))
    reports = [r.to_dict() for r in nonrigid_report(int(b["flats"]), seed=cfg.seed, config=config)]
    checks = []
    for i, r in enumerate(reports):
        ok = (r["n_distinct_flags"] >= 7 and not r["common_frame"] and r["margin_certified"] >= b["margin"]
              and r["slope"] >= b["slope"])
        checks.append(CheckRecord(f"flat {i} is not mapped near a flat", ok,
                                  {k: r[k] for k in ("n_distinct_flags", "common_frame", "margin_certified", "slope")},
                                  {"n_distinct_flags": 7, "margin": b["margin"], "slope": b["slope"]}))
    rep = QieReport(cfg.verb, cfg.seed, b, checks, {"flats": reports})
    rep.csv_tables["hausdorff"] = (["flat", "radius", "hausdorff"],
                                   [[i, R, d] for i, r in enumerate(reports) for R, d in zip(r["radii"], r["hausdorff"])])
    return rep


# -- building verbs --------------------------------------------------------------------

def run_building_dist(cfg):
    p = int(cfg.inputs.get("p", 2))
    try:
        l1 = lattice_normal_form(_matrix(cfg.inputs["l1"], "l1"), p) if cfg.inputs.get("l1") else base_class(p)
        l2 = lattice_normal_form(_matrix(cfg.inputs["l2"], "l2"), p) if cfg.inputs.get("l2") else base_class(p)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if l1.n != 3 or l2.n != 3:
        raise UsageError("building distances need 3x3 matrices")
    rp = relative_position(l1, l2)
    comb, cat0 = comb_distance(l1, l2), cat0_distance(l1, l2)
    checks = [CheckRecord("cat0 and comb distances are bi-Lipschitz", CAT0_COMB_LOWER * comb - 1e-12 <= cat0
                          <= CAT0_COMB_UPPER * comb + 1e-12, {"cat0": cat0, "comb": comb},
                          {"lower": CAT0_COMB_LOWER, "upper": CAT0_COMB_UPPER})]
    cap = int(cfg.budgets["cap"])
    try:
        bfs = comb_distance_bfs(l1, l2, cap=cap)
        checks.append(CheckRecord("breadth-first distance equals formula", bfs == comb, {"bfs": bfs}, {"cap": cap}))
    except BfsCapExceeded:
        bfs = None
    return QieReport(cfg.verb, cfg.seed, cfg.budgets, checks,
                     {"l1": l1.to_dict(), "l2": l2.to_dict(), "relative_position": list(rp.exponents),
                      "comb": comb, "cat0": cat0, "bfs": bfs})


def run_building_anmap(cfg):
    u = _tree_vertex(cfg.inputs.get("u", "0,0"), 2, "u")
    w = _tree_vertex(cfg.inputs.get("w", "0,0"), 2, "w")
    lc = an_map_p(u, w)
    rp = relative_position(base_class(), lc)
    return QieReport(cfg.verb, cfg.seed, cfg.budgets,
                     [CheckRecord("image is a canonical lattice class", lattice_normal_form(lc.matrix()) == lc, {}, {})],
                     {"u": [u.m, u.x], "w": [w.m, w.x], "image": lc.to_dict(),
                      "relative_position_from_base": list(rp.exponents), "comb_from_base": rp.comb})


def run_building_phi(cfg):
    radius = int(cfg.budgets["radius"])
    a, b = phi_distortion_pairs(radius)
    top = max(qi_self_embedding_tree(v).m for v in tree_ball(TreeVertex(0, 0), radius))
    pairs, counts = np.unique(np.column_stack([a, b]), axis=0, return_counts=True)
    fit = fit_qi_constants(pairs.astype(float))
    ok = fit.L <= PHI_BOUNDS["L"] and fit.C <= PHI_BOUNDS["C"]
    rep = QieReport(cfg.verb, cfg.seed, cfg.budgets,
                    [CheckRecord("fitted constants within declared bounds", ok,
                                 {"L": fit.L, "C": fit.C, "pairs": int(len(a))}, PHI_BOUNDS),
                     CheckRecord("image levels stay below the end", top <= -1,
                                 {"max_image_level": top, "min_distortion": int((b - a).min()),
                                  "max_distortion": int((b - a).max())}, {"max_image_level": -1})],
                    {"fit": fit.to_dict()}, fitted_constants={"L": fit.L, "C": fit.C})
    rep.csv_tables["distortion"] = (["d_src", "d_dst", "count"],
                                    [[int(x), int(y), int(c)] for (x, y), c in zip(pairs, counts)])
    return rep


def run_building_nonrigid(cfg):
    b = cfg.budgets
    config = NonrigidConfigP(radii=tuple(int(r) for r in b["radii"]), sector_bound=int(b["sector_bound"]),
                             apartment_ratio=b["apartment_ratio"])
    flats = acceptance.discrete_flats(cfg.seed, int(b["flats"]))
    reports = [nonrigid_flat_report_p(f, config, seed=cfg.seed + k).to_dict() for k, f in enumerate(flats)]
    checks = []
    for i, r in enumerate(reports):
        near_sectors = all(x["sector_hausdorff"] <= config.sector_bound for x in r["radii"])
        far = all(x["best_apartment_distance"] >= config.apartment_ratio * x["radius"] for x in r["radii"])
        checks.append(CheckRecord(f"flat {i} is not mapped near an apartment",
                                  not r["common_frame"] and near_sectors and far,
                                  {"common_frame": r["common_frame"], "n_distinct_flags": r["n_distinct_flags"],
                                   "radii": r["radii"]},
                                  {"sector_hausdorff": config.sector_bound, "apartment_ratio": config.apartment_ratio}))
    control = common_frame_test_p(estimate_flags_p(TreeFlat.vertical(), config.flag_radius, "plain"),
                                  config.flag_depth)
    checks.append(CheckRecord("control: vertical flat under the plain map", control.common,
                              {"common_frame": control.common, "n_lines": control.n_lines}, {"common_frame": True}))
    rep = QieReport(cfg.verb, cfg.seed, b, checks, {"flats": reports})
    rep.csv_tables["hausdorff"] = (["flat", "radius", "sector_hausdorff", "best_apartment_distance"],
                                   [[i, x["radius"], x["sector_hausdorff"], x["best_apartment_distance"]]
                                    for i, r in enumerate(reports) for x in r["radii"]])
    return rep


# -- suite -----------------------------------------------------------------------------

def run_suite_acceptance(cfg, echo=print):
    only = cfg.inputs.get("only")
    if only is not None:
        try:
            only = {int(x) for x in str(only).split(",")}
        except ValueError:
            raise UsageError("--only expects comma-separated criterion numbers") from None
        if not only <= {c.number for c in acceptance.CRITERIA}:
            raise UsageError("criterion numbers run from 1 to 12")
    outcomes = acceptance.run_acceptance(cfg.seed, only, echo=echo)
    return acceptance.acceptance_report(cfg.seed, outcomes)


VERBS = {
    "pattern": {"build": run_pattern_build, "restrict": run_pattern_restrict, "count": run_pattern_count},
    "maps": {"check": run_maps_check, "search": run_maps_search, "enumerate": run_maps_enumerate},
    "anmap": {"eval": run_anmap_eval, "fit": run_anmap_fit, "flat": run_anmap_flat, "nonrigid": run_anmap_nonrigid},
    "building": {"dist": run_building_dist, "anmap": run_building_anmap, "phi": run_building_phi,
                 "nonrigid": run_building_nonrigid},
    "suite": {"acceptance": run_suite_acceptance},
}

# per-verb non-budget inputs: name -> help text
INPUT_HELP = {
    "type": "root system type (A, BC, D, E, F4, G2)", "rank": "rank",
    "label": "arrangement label such as A2 or BC2xA1",
    "hyperplane": "defining equations of the subspace, e.g. \"x1=x2\"",
    "expect": "expected restricted hyperplane count",
    "src_label": "source arrangement label", "dst_label": "target arrangement label",
    "matrix": "JSON matrix with integer or \"n/d\" entries",
    "injective": "search injective maps into a larger target",
    "point": "t,x,s,z (use --point=-1,0,2,0 for negative values)", "other": "second point t,x,s,z",
    "x0": "x offset of the vertical flat", "z0": "z offset of the vertical flat",
    "l1": "first lattice basis as a JSON 3x3 matrix (columns span)", "l2": "second lattice basis",
    "p": "prime (2, 3, 5 or 7)",
    "u": "tree vertex m,x in the first factor", "w": "tree vertex m,x in the second factor",
    "only": "comma-separated criterion numbers",
}
INPUTS = {
    "pattern build": ("type", "rank", "label"),
    "pattern restrict": ("type", "rank", "label", "hyperplane", "expect"),
    "pattern count": ("type", "rank", "label"),
    "maps check": ("src_label", "dst_label", "matrix"),
    "maps search": ("src_label", "dst_label", "injective"),
    "maps enumerate": ("label",),
    "anmap eval": ("point", "other"),
    "anmap flat": ("x0", "z0"),
    "building dist": ("l1", "l2", "p"),
    "building anmap": ("u", "w"),
    "suite acceptance": ("only",),
}
FLAG_NAMES = {"src_label": "--src", "dst_label": "--dst"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qie", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="64-bit seed (required for sampling verbs)")
    common.add_argument("--config", help="JSON config file with seed, budgets, inputs and out")
    common.add_argument("--out", help=f"output directory (default: ${ENV_OUTPUT_DIR} or {DEFAULT_OUTPUT_DIR})")
    for group, actions in VERBS.items():
        gp = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for action in actions:
            verb = f"{group} {action}"
            ap = gp.add_parser(action, parents=[common])
            for name in INPUTS.get(verb, ()):
                flag = FLAG_NAMES.get(name, "--" + name.replace("_", "-"))
                if name == "injective":
                    ap.add_argument(flag, dest=name, action="store_true", default=None, help=INPUT_HELP[name])
                else:
                    ap.add_argument(flag, dest=name, help=INPUT_HELP[name])
            for name, default in BUDGETS.get(verb, {}).items():
                ap.add_argument("--" + name.replace("_", "-"), dest=name, help=f"budget (default {default})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        report = VERBS[args.group][args.action](cfg)
        report.inputs = cfg.inputs
    except (UsageError, ValueError, ArithmeticError) as e:  # invalid or degenerate inputs
        print(f"qie: error: {e}", file=sys.stderr)
        return 2
    if args.group != "suite":
        for c in report.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}")
    paths = report.write(cfg.out_dir, f"{args.group}-{args.action}")
    print(f"report: {paths[0]}")
    if not report.passed:
        print(f"qie: failing checks: {', '.join(report.failing)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
