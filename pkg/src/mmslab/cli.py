"""Command line front end.

Every verb loads JSON inputs, runs one library operation, and emits a
report: JSON by default, CSV for the tabular sections when ``--csv`` is
given.  Identical flags and input files produce byte-identical reports.
Exit codes: 0 for a completed run, 1 for a usage or precondition error
(with a machine-readable error object on the report stream), 2 when the
verdict is inconclusive and ``--strict`` was requested.
"""

import argparse
import csv
import json
import math
import os
import platform
import sys

import numpy as np
import scipy
from scipy.linalg import expm

from mmslab import __version__
from mmslab.contraction import (chebyshev_times, mcp_check, necklace_schedule,
                                scalar_bound, schedule_density_check)
from mmslab.core import load_space, save_space, validate_space
from mmslab.generators import (NecklaceParams, circle_space,
                               euclidean_ball_grid, hawaiian_truncation,
                               necklace, segment_space)
from mmslab.regularity import (epsilon_regular_scan, gh_exact, gh_lower_bound,
                               regular_set_measure)
from mmslab.symmetry import (EuclideanIsometry, condition_a_scan,
                             critical_scale, displacement,
                             enumerate_isometries, euclidean_power_escape,
                             fixed_set, small_subgroup_probe)
from mmslab.transport import (as_measure, delta, lift_to_geodesic_plan,
                              solve_w2, symmetrized_competitor, uniform_on,
                              uniqueness_probe, verify_competitor)

_ANCHORS = {
    ("space", "gen", "segment"): "Example 5.2",
    ("space", "gen", "circle"): "Example 5.1",
    ("space", "gen", "earring"): "Example 5.1",
    ("space", "gen", "necklace"): "Example 5.2",
    ("space", "gen", "ball"): "§2.1",
    ("space", "validate"): "§2.1",
    ("ot", "solve"): "Eq. eq:w-d",
    ("ot", "probe"): "Thm 1.4",
    ("ot", "competitor"): "Lemma lm:02",
    ("mcp", "verify"): "Def. def:MCP",
    ("mcp", "schedule"): "Lemma lm:mcp",
    ("mcp", "scalar-bound"): "Lemma 5.3",
    ("iso", "enum"): "§2.1",
    ("iso", "fix"): "Thm 1.1",
    ("iso", "displacement"): "§3",
    ("iso", "condition-a"): "Thm 1.1",
    ("iso", "probe"): "Prop 3.1",
    ("iso", "escape"): "Prop 3.1",
    ("iso", "critical-scale"): "Prop 3.1",
    ("gh", "exact"): "§2.1",
    ("gh", "scan"): "§2.1",
    ("gh", "regular-mass"): "§2.1",
}


# === argument plumbing ===

class _Parser(argparse.ArgumentParser):
    """Argparse variant that exits 1 (not 2) on bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _ids(text):
    """Cell id list, JSON ("[0,1,2]") or comma separated ("0,1,2")."""
    text = text.strip()
    if text.startswith("["):
        return [int(v) for v in json.loads(text)]
    return [int(v) for v in text.split(",") if v != ""]


def _k_set(text):
    return tuple(int(v) for v in text.split(","))

def _ball_spec(text):
    c, r = text.split(":")
    return int(c), float(r)


def _perm(text):
    return [int(v) for v in json.loads(text)]


def _measure(space, doc):
    """Mass vector from a measure document.

    The canonical form is {"atoms": [{"point": i, "mass": m}, ...]};
    {"point": i} and {"uniform": [ids]} are accepted shorthands.
    """
    if isinstance(doc, dict) and "atoms" in doc:
        pairs = [(a["point"], a["mass"]) for a in doc["atoms"]]
        return as_measure(space, pairs)
    if isinstance(doc, dict) and "point" in doc:
        return delta(space, int(doc["point"]))
    if isinstance(doc, dict) and "uniform" in doc:
        return uniform_on(space, [int(i) for i in doc["uniform"]])
    raise ValueError('measure must be {"atoms": [...]}, {"point": i},'
                     ' or {"uniform": [ids]}')


def _coupling_rows(coupling):
    return [[int(i), int(j), float(m)] for i, j, m in coupling.entries()]


# === report emission ===

def _sig12(obj):
    """Copy with floats rounded to 12 significant digits; non-finite
    values become strings so the report stays strict JSON."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return repr(v)
        return float(f"{v:.12g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _sig12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_sig12(v) for v in obj]
    return obj


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(doc, path):
    _write(json.dumps(_sig12(doc), indent=1, sort_keys=True) + "\n", path)


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _emit_csv(header, rows, path):
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    _write(buf.getvalue(), path)


def _thread_cap():
    raw = os.environ.get("MMS_LAB_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# === verb handlers ===
# Each handler returns (anchor, results, inconclusive, table); table is
# (header, rows) for the verbs with a tabular section, else None.

def _cmd_space_gen(args):
    p = args.params
    if args.kind == "segment":
        sp = segment_space(float(p["resolution"]))
    elif args.kind == "circle":
        sp = circle_space(float(p["radius"]), int(p["resolution"]))
    elif args.kind == "earring":
        sp = hawaiian_truncation(int(p["n"]), int(p["resolution"]))
    elif args.kind == "necklace":
        beads = tuple((float(x), float(r)) for x, r in p["beads"])
        sp = necklace(NecklaceParams(beads=beads,
                                     resolution=float(p["resolution"])))
    else:
        sp = euclidean_ball_grid(int(p["k"]), float(p["r"]),
                                 float(p["resolution"]))
    save_space(sp, args.out, dist_mode=args.dist_mode)
    results = {
        "kind": args.kind,
        "cells": sp.n,
        "total_mass": sp.total_mass,
        "diameter": sp.diameter,
        "pitch": sp.pitch(),
        "path": args.out,
    }
    return _ANCHORS[("space", "gen", args.kind)], results, False, None


def _cmd_space_validate(args):
    sp = load_space(args.space)
    rep = validate_space(sp, tol=args.tol, seed=args.seed)
    results = {
        "ok": rep.ok,
        "n": rep.n,
        "symmetry_defect": rep.symmetry_defect,
        "diagonal_defect": rep.diagonal_defect,
        "negative_weights": rep.negative_weights,
        "worst_triangle_defect": rep.worst_triangle_defect,
        "triangle_violations": [list(t) for t in rep.triangle_violations],
        "triples_checked": rep.triples_checked,
        "exhaustive": rep.exhaustive,
    }
    inconclusive = rep.ok and not rep.exhaustive
    return _ANCHORS[("space", "validate")], results, inconclusive, None


def _cmd_ot_solve(args):
    sp = load_space(args.space)
    res = solve_w2(sp, _measure(sp, args.mu0), _measure(sp, args.mu1))
    results = {
        "cost": res.cost,
        "w2": math.sqrt(res.cost),
        "coupling": _coupling_rows(res.coupling),
    }
    return _ANCHORS[("ot", "solve")], results, False, None


def _cmd_ot_probe(args):
    sp = load_space(args.space)
    res = uniqueness_probe(sp, _measure(sp, args.mu0), _measure(sp, args.mu1),
                           tol=args.tol, seed=args.seed, draws=args.draws)
    results = {
        "unique": res.unique,
        "deviation": res.deviation,
        "cost": res.base.cost,
        "coupling": _coupling_rows(res.base.coupling),
        "witness": None if res.witness is None else _coupling_rows(res.witness),
    }
    return _ANCHORS[("ot", "probe")], results, False, None


def _cmd_ot_competitor(args):
    sp = load_space(args.space)
    res = solve_w2(sp, _measure(sp, args.mu0), _measure(sp, args.mu1))
    plan = lift_to_geodesic_plan(sp, res.coupling)
    comp = symmetrized_competitor(sp, args.perm, plan, x=args.x,
                                  targets=args.targets)
    rep = verify_competitor(sp, plan, comp)
    results = {
        "ok": rep.ok,
        "marginal_defect": rep.marginal_defect,
        "cost_defect": rep.cost_defect,
        "plan_difference": rep.plan_difference,
        "marginals_equal": rep.marginals_equal,
        "cost_equal": rep.cost_equal,
        "distinct": rep.distinct,
        "cost": res.cost,
    }
    return _ANCHORS[("ot", "competitor")], results, False, None


def _mcp_results(rep):
    return {
        "ok": rep.ok,
        "allowance": rep.allowance,
        "worst_slack": rep.worst_slack,
        "worst_t": rep.worst_t,
        "worst_cell": rep.worst_cell,
        "mass_target": rep.mass_target,
        "marginal_defect": rep.marginal_defect,
        "rows": [list(r) for r in rep.rows],
    }


def _cmd_mcp_verify(args):
    sp = load_space(args.space)
    t_samples = chebyshev_times(args.t_samples)
    if args.plan == "auto":
        if args.A is None:
            raise ValueError("--plan auto needs --A")
        res = solve_w2(sp, delta(sp, args.x), uniform_on(sp, args.A))
        plan = lift_to_geodesic_plan(sp, res.coupling)
    else:
        if args.target_fiber is None or args.target_count is None:
            raise ValueError("--plan schedule needs --target-fiber and"
                             " --target-count")
        plan = necklace_schedule(sp, args.x, args.target_fiber,
                                 args.target_count).plan
    rep = mcp_check(sp, plan, t_samples=t_samples, allowance=args.allowance)
    table = (["t", "cell", "lhs", "rhs", "slack"],
             [list(r) for r in rep.rows])
    return _ANCHORS[("mcp", "verify")], _mcp_results(rep), False, table


def _cmd_mcp_schedule(args):
    sp = load_space(args.space)
    sched = necklace_schedule(sp, args.source, args.target_fiber,
                              args.target_count)
    dens = schedule_density_check(sp, sched, allowance=args.allowance)
    results = {
        "ok": dens.all_ok,
        "x_source": sched.x_source,
        "x_spread": sched.x_spread,
        "x_spread_exact": sched.x_spread_exact,
        "x_target": sched.x_target,
        "length": sched.length,
        "t_spread": sched.t_spread,
        "t_flat_start": sched.t_flat_start,
        "t_flat_end": sched.t_flat_end,
        "kappa_spread": sched.kappa_spread,
        "kappa_target": sched.kappa_target,
        "max_segment_slope": sched.max_segment_slope,
        "worst_speed_defect": sched.worst_speed_defect,
        "density": {
            "ok": dens.ok,
            "allowance": dens.allowance,
            "worst_slack": dens.worst_slack,
            "worst_t": dens.worst_t,
            "ratio_defect": dens.ratio_defect,
            "heights_ok": dens.heights_ok,
            "marginal_defect": dens.marginal_defect,
            "rows": [list(r) for r in dens.rows],
            "height_rows": [list(r) for r in dens.height_rows],
        },
    }
    table = (["t", "support_mass", "lhs", "rhs", "slack"],
             [list(r) for r in dens.rows])
    return _ANCHORS[("mcp", "schedule")], results, False, table


def _cmd_mcp_scalar_bound(args):
    rep = scalar_bound(t_max=args.t_max, d_max=args.d_max,
                       samples=args.samples, cushion=args.cushion)
    results = {
        "ok": rep.ok,
        "min_margin": rep.min_margin,
        "argmin_t": rep.argmin_t,
        "argmin_d": rep.argmin_d,
        "samples": rep.samples,
    }
    return _ANCHORS[("mcp", "scalar-bound")], results, False, None


def _cmd_iso_enum(args):
    sp = load_space(args.space)
    res = enumerate_isometries(sp, iso_tol=args.iso_tol, budget=args.budget)
    results = {
        "count": len(res.maps),
        "complete": res.complete,
        "nodes": res.nodes,
        "maps": [{
            "perm": list(m.perm),
            "distortion": m.distortion,
            "measure_defect": m.measure_defect,
            "measure_preserving": m.is_measure_preserving(),
        } for m in res.maps],
    }
    table = (["iso", "distortion", "measure_defect"],
             [[i, m.distortion, m.measure_defect]
              for i, m in enumerate(res.maps)])
    return _ANCHORS[("iso", "enum")], results, not res.complete, table


def _cmd_iso_fix(args):
    sp = load_space(args.space)
    balls = args.ball or []
    if args.perm is not None:
        perms, complete = [tuple(args.perm)], True
    else:
        res = enumerate_isometries(sp, iso_tol=args.iso_tol)
        perms, complete = list(res.perms()), res.complete
    maps = []
    for perm in perms:
        fs = fixed_set(sp, perm, fix_tol=args.fix_tol, balls=balls)
        maps.append({
            "perm": list(perm),
            "mass": fs.mass,
            "cells": len(fs.indices),
            "ball_masses": list(fs.ball_masses),
        })
    results = {"complete": complete, "maps": maps,
               "balls": [list(b) for b in balls]}
    header = ["iso", "mass"] + [f"ball{i}" for i in range(len(balls))]
    rows = [[i, m["mass"]] + m["ball_masses"] for i, m in enumerate(maps)]
    return _ANCHORS[("iso", "fix")], results, not complete, (header, rows)


def _cmd_iso_displacement(args):
    sp = load_space(args.space)
    if args.perm:
        group, complete = [tuple(p) for p in args.perm], True
    else:
        res = enumerate_isometries(sp, iso_tol=args.iso_tol)
        group, complete = list(res.perms()), res.complete
    value = displacement(sp, group, args.r, args.x)
    results = {
        "displacement": value,
        "r": args.r,
        "x": args.x,
        "elements": len(group),
        "r_over_20": args.r / 20.0,
    }
    return _ANCHORS[("iso", "displacement")], results, not complete, None


def _cmd_iso_condition_a(args):
    sp = load_space(args.space)
    rep = condition_a_scan(sp, args.x, args.s, iso_tol=args.iso_tol,
                           fix_tol=args.fix_tol)
    results = {
        "holds": rep.holds,
        "vacuous": rep.vacuous,
        "complete": rep.complete,
        "fix_sup": rep.fix_sup,
        "ball_mass": rep.ball_mass,
        "gap": rep.gap,
        "normalized_gap": rep.normalized_gap,
        "nontrivial": rep.nontrivial,
    }
    return _ANCHORS[("iso", "condition-a")], results, not rep.complete, None


def _cmd_iso_probe(args):
    sp = load_space(args.space)
    res = small_subgroup_probe(sp, args.eps, compact=args.compact,
                               budget=args.budget, iso_tol=args.iso_tol)
    results = {
        "found": res.found,
        "inconclusive": res.inconclusive,
        "epsilon": res.epsilon,
        "sup_displacement": res.sup_displacement,
        "candidates": res.candidates,
        "subgroup": None if res.subgroup is None else {
            "order": len(res.subgroup),
            "elements": [list(p) for p in res.subgroup.elements],
        },
    }
    return _ANCHORS[("iso", "probe")], results, res.inconclusive, None


def _random_small_motion(k, seed, scale):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k))
    q = expm(scale * (a - a.T))
    v = scale * rng.standard_normal(k)
    return EuclideanIsometry(q=q, v=v)


def _cmd_iso_escape(args):
    if args.random:
        iso = _random_small_motion(args.k, args.seed, args.scale)
    else:
        if args.q is None or args.v is None:
            raise ValueError("need --q and --v, or --random with --k")
        iso = EuclideanIsometry(q=np.asarray(args.q, dtype=float),
                                v=np.asarray(args.v, dtype=float))
    res = euclidean_power_escape(iso, threshold=args.threshold,
                                 max_pow=args.max_pow)
    results = {
        "found": res.found,
        "n": res.n,
        "displacement": res.displacement,
        "threshold": res.threshold,
        "max_pow": res.max_pow,
        "k": iso.k,
    }
    return _ANCHORS[("iso", "escape")], results, not res.found, None


def _cmd_iso_critical_scale(args):
    sp = load_space(args.space)
    res = enumerate_isometries(sp, iso_tol=args.iso_tol)
    cs = critical_scale(sp, res.perms(), args.x, args.lo, args.hi,
                        tol=args.tol)
    results = {
        "r": cs.r,
        "bracket": list(cs.bracket),
        "displacement": cs.displacement,
        "defect": cs.defect,
        "elements": len(res.maps),
    }
    return _ANCHORS[("iso", "critical-scale")], results, not res.complete, None


def _cmd_gh_exact(args):
    x = load_space(args.space)
    y = load_space(args.space2)
    value, witness = gh_exact(x, y, size_limit=args.size_limit)
    results = {
        "value": value,
        "lower_bound": gh_lower_bound(x, y),
        "distortion": witness.distortion,
        "relation": [list(p) for p in witness.relation],
    }
    return _ANCHORS[("gh", "exact")], results, False, None


def _scan_rows(rows):
    return [{
        "r": row.r,
        "k": row.k,
        "estimate": row.estimate,
        "ratio": row.ratio,
        "err_verdict": row.err_verdict,
        "err_sound": row.err_sound,
        "ball_cells": row.ball_cells,
        "verdict": row.verdict,
    } for row in rows]


def _cmd_gh_scan(args):
    sp = load_space(args.space)
    rep = epsilon_regular_scan(sp, args.x, eps=args.eps, delta=args.delta,
                               k_set=args.k, r_samples=args.r_samples,
                               subsample=args.subsample)
    results = {
        "verdicts": {str(k): v for k, v in sorted(rep.verdicts.items())},
        "degenerate": rep.degenerate,
        "rows": _scan_rows(rep.rows),
    }
    inconclusive = any(v == "inconclusive" for v in rep.verdicts.values())
    table = (["k", "r", "estimate", "ratio", "err_verdict", "err_sound",
              "verdict"],
             [[r.k, r.r, r.estimate, r.ratio, r.err_verdict, r.err_sound,
               r.verdict] for r in rep.rows])
    return _ANCHORS[("gh", "scan")], results, inconclusive, table


def _cmd_gh_regular_mass(args):
    sp = load_space(args.space)
    rep = regular_set_measure(sp, eps=args.eps, delta=args.delta,
                              k_set=args.k, budget=args.budget,
                              r_samples=args.r_samples,
                              subsample=args.subsample)

    def split(ms):
        return {"in_mass": ms.in_mass, "out_mass": ms.out_mass,
                "inconclusive_mass": ms.inconclusive_mass}

    results = {
        "per_k": {str(k): split(ms) for k, ms in sorted(rep.per_k.items())},
        "overall": split(rep.overall),
        "scanned_cells": len(rep.scanned),
        "scanned_mass": rep.scanned_mass,
    }
    inconclusive = rep.overall.inconclusive_mass > 0.0
    return _ANCHORS[("gh", "regular-mass")], results, inconclusive, None


# === parser construction ===

def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--report", metavar="FILE",
                        help="report path (default stdout)")
    common.add_argument("--csv", action="store_true",
                        help="emit the tabular section as CSV")
    common.add_argument("--strict", action="store_true",
                        help="exit 2 on inconclusive verdicts")

    top = _Parser(prog="mms-lab",
                  description="finite metric measure space laboratory")
    groups = top.add_subparsers(dest="group", required=True,
                                metavar="{space,ot,mcp,iso,gh}")

    def leaf(sub, name, handler, command, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.set_defaults(handler=handler, command=command)
        return p

    # space
    space = groups.add_parser("space").add_subparsers(dest="verb",
                                                      required=True)
    p = leaf(space, "gen", _cmd_space_gen, "space gen",
             help="write a generated space to a JSON file")
    p.add_argument("--kind", required=True,
                   choices=["segment", "circle", "earring", "necklace",
                            "ball"])
    p.add_argument("--params", required=True, type=json.loads,
                   help='generator parameters, e.g. {"resolution": 0.01}')
    p.add_argument("--out", required=True)
    p.add_argument("--dist-mode", default="explicit",
                   choices=["explicit", "ambient-L2", "ambient-Linf",
                            "graph"])
    p = leaf(space, "validate", _cmd_space_validate, "space validate",
             help="check the metric axioms of a space file")
    p.add_argument("--space", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)

    # ot
    ot = groups.add_parser("ot").add_subparsers(dest="verb", required=True)
    for name, handler in (("solve", _cmd_ot_solve),
                          ("probe", _cmd_ot_probe),
                          ("competitor", _cmd_ot_competitor)):
        p = leaf(ot, name, handler, f"ot {name}")
        p.add_argument("--space", required=True)
        p.add_argument("--mu0", required=True, type=json.loads)
        p.add_argument("--mu1", required=True, type=json.loads)
        if name == "probe":
            p.add_argument("--tol", type=float, default=1e-8)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--draws", type=int, default=3)
        if name == "competitor":
            p.add_argument("--perm", required=True, type=_perm)
            p.add_argument("--x", type=int)
            p.add_argument("--targets", type=_ids)

    # mcp
    mcp = groups.add_parser("mcp").add_subparsers(dest="verb", required=True)
    p = leaf(mcp, "verify", _cmd_mcp_verify, "mcp verify",
             help="cell-by-cell contraction inequality for one plan")
    p.add_argument("--space", required=True)
    p.add_argument("--x", required=True, type=int)
    p.add_argument("--A", type=_ids)
    p.add_argument("--plan", default="auto", choices=["auto", "schedule"])
    p.add_argument("--target-fiber", type=int)
    p.add_argument("--target-count", type=int)
    p.add_argument("--t-samples", type=int, default=33)
    p.add_argument("--allowance", type=float)
    p = leaf(mcp, "schedule", _cmd_mcp_schedule, "mcp schedule",
             help="bead-chain spreading plan with its density profile")
    p.add_argument("--space", required=True)
    p.add_argument("--source", required=True, type=int)
    p.add_argument("--target-fiber", required=True, type=int)
    p.add_argument("--target-count", required=True, type=int)
    p.add_argument("--allowance", type=float)
    p = leaf(mcp, "scalar-bound", _cmd_mcp_scalar_bound, "mcp scalar-bound",
             help="grid check of the scalar contraction estimate")
    p.add_argument("--t-max", type=float, default=0.2)
    p.add_argument("--d-max", type=float, default=math.pi / 2.0 + 0.25)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--cushion", type=float, default=1e-12)

    # iso
    iso = groups.add_parser("iso").add_subparsers(dest="verb", required=True)
    p = leaf(iso, "enum", _cmd_iso_enum, "iso enum",
             help="enumerate distance-preserving cell permutations")
    p.add_argument("--space", required=True)
    p.add_argument("--iso-tol", type=float)
    p.add_argument("--budget", type=int, default=2_000_000)
    p = leaf(iso, "fix", _cmd_iso_fix, "iso fix",
             help="fixed sets of one or all isometries")
    p.add_argument("--space", required=True)
    p.add_argument("--perm", type=_perm)
    p.add_argument("--iso-tol", type=float)
    p.add_argument("--fix-tol", type=float)
    p.add_argument("--ball", action="append", type=_ball_spec,
                   metavar="CENTER:RADIUS")
    p = leaf(iso, "displacement", _cmd_iso_displacement, "iso displacement",
             help="largest move on the half-radius ball")
    p.add_argument("--space", required=True)
    p.add_argument("--x", required=True, type=int)
    p.add_argument("--r", required=True, type=float)
    p.add_argument("--perm", action="append", type=_perm)
    p.add_argument("--iso-tol", type=float)
    p = leaf(iso, "condition-a", _cmd_iso_condition_a, "iso condition-a",
             help="fixed mass of nontrivial isometries against ball mass")
    p.add_argument("--space", required=True)
    p.add_argument("--x", required=True, type=int)
    p.add_argument("--s", required=True, type=float)
    p.add_argument("--iso-tol", type=float)
    p.add_argument("--fix-tol", type=float)
    p = leaf(iso, "probe", _cmd_iso_probe, "iso probe",
             help="search for a nontrivial small-displacement subgroup")
    p.add_argument("--space", required=True)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--compact", type=_ids)
    p.add_argument("--budget", type=int, default=4096)
    p.add_argument("--iso-tol", type=float)
    p = leaf(iso, "escape", _cmd_iso_escape, "iso escape",
             help="first power of a rigid motion past the threshold")
    p.add_argument("--q", type=json.loads, help="orthogonal matrix, JSON")
    p.add_argument("--v", type=json.loads, help="translation vector, JSON")
    p.add_argument("--random", action="store_true",
                   help="sample a small random motion instead of --q/--v")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--max-pow", type=int, default=1_000_000)
    p = leaf(iso, "critical-scale", _cmd_iso_critical_scale,
             "iso critical-scale",
             help="radius where the displacement crosses r/20")
    p.add_argument("--space", required=True)
    p.add_argument("--x", required=True, type=int)
    p.add_argument("--lo", required=True, type=float)
    p.add_argument("--hi", required=True, type=float)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--iso-tol", type=float)

    # gh
    gh = groups.add_parser("gh").add_subparsers(dest="verb", required=True)
    p = leaf(gh, "exact", _cmd_gh_exact, "gh exact",
             help="exact distance between two small spaces")
    p.add_argument("--space", required=True)
    p.add_argument("--space2", required=True)
    p.add_argument("--size-limit", type=int, default=8)
    p = leaf(gh, "scan", _cmd_gh_scan, "gh scan",
             help="regular-point verdict for one cell")
    p.add_argument("--space", required=True)
    p.add_argument("--x", required=True, type=int)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--k", type=_k_set, default=(1, 2, 3))
    p.add_argument("--r-samples", type=int, default=12)
    p.add_argument("--subsample", type=int, default=8)
    p = leaf(gh, "regular-mass", _cmd_gh_regular_mass, "gh regular-mass",
             help="mass split of a budgeted cell scan")
    p.add_argument("--space", required=True)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--k", type=_k_set, default=(1, 2, 3))
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--r-samples", type=int, default=12)
    p.add_argument("--subsample", type=int, default=8)

    return top


# === driver ===

def _inputs_echo(args):
    skip = {"handler", "command"}
    out = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)

    report_path = args.report
    try:
        anchor, results, inconclusive, table = args.handler(args)
    except (ValueError, KeyError, TypeError, IndexError, OSError,
            json.JSONDecodeError) as exc:
        doc = {"command": args.command,
               "error": {"type": type(exc).__name__, "message": str(exc)}}
        _emit_json(doc, report_path)
        sys.stderr.write(f"mms-lab: {type(exc).__name__}: {exc}\n")
        return 1

    if args.csv and table is not None:
        _emit_csv(table[0], table[1], report_path)
    else:
        doc = {
            "command": args.command,
            "inputs": _inputs_echo(args),
            "paper_anchor": anchor,
            "results": results,
            "threads": {"cap": _thread_cap(), "used": 1},
            "versions": {
                "mmslab": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
                "scipy": scipy.__version__,
            },
        }
        _emit_json(doc, report_path)
    if inconclusive and args.strict:
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
