"""Discrete quadratic optimal transport on finite metric measure spaces.

The squared 2-Wasserstein cost between two mass vectors is the minimum of
sum sigma_ij d(i,j)^2 over couplings sigma with the given marginals.  Two
independent routes compute it: an LP solve (HiGHS) and an exact enumeration
of basic feasible couplings for tiny supports.  Couplings lift to plans of
discrete geodesics, which is where pushforwards, interpolants, and the
fixed-set symmetrization competitor live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from mmslab.core import DiscreteGeodesic, FiniteMMS, evaluate, geodesics_between

MASS_TOL = 1e-12
BRUTE_SUPPORT_LIMIT = 5


# === measures ===

def as_measure(space: FiniteMMS, spec) -> np.ndarray:
    """Coerce a measure description to a dense nonnegative mass vector.

    Accepts a dense vector, a ``{point: mass}`` mapping, or an iterable of
    ``(point, mass)`` pairs.
    """
    out = np.zeros(space.n)
    if isinstance(spec, np.ndarray):
        if spec.shape != (space.n,):
            raise ValueError(f"expected a vector of {space.n} masses")
        out[:] = spec
    elif isinstance(spec, dict):
        for i, m in spec.items():
            out[int(i)] += float(m)
    else:
        for i, m in spec:
            out[int(i)] += float(m)
    if np.any(out < 0):
        raise ValueError("negative mass")
    if out.sum() <= 0:
        raise ValueError("measure has no mass")
    return out


def delta(space: FiniteMMS, point: int) -> np.ndarray:
    return as_measure(space, {point: 1.0})


def uniform_on(space: FiniteMMS, indices) -> np.ndarray:
    """Normalized restriction of the reference measure to a cell set."""
    idx = np.asarray(list(indices), dtype=int)
    out = np.zeros(space.n)
    out[idx] = space.weight[idx]
    return out / out.sum()


def _support(mu: np.ndarray):
    idx = np.flatnonzero(mu > MASS_TOL)
    return idx, mu[idx]


def _normalized_pair(mu0: np.ndarray, mu1: np.ndarray):
    t0, t1 = mu0.sum(), mu1.sum()
    if abs(t0 - t1) > 1e-9 * max(t0, t1):
        raise ValueError("marginals must carry equal total mass")
    return mu0 / t0, mu1 / t1


# === couplings ===

@dataclass(frozen=True)
class Coupling:
    """Sparse-support coupling: ``matrix[a, b]`` is the mass moved from
    cell ``source_idx[a]`` to cell ``target_idx[b]``."""

    source_idx: np.ndarray
    target_idx: np.ndarray
    matrix: np.ndarray

    def entries(self, tol: float = MASS_TOL):
        for a, i in enumerate(self.source_idx):
            for b, j in enumerate(self.target_idx):
                m = self.matrix[a, b]
                if m > tol:
                    yield int(i), int(j), float(m)

    def row_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


@dataclass(frozen=True)
class TransportResult:
    coupling: Coupling
    cost: float            # squared 2-Wasserstein distance

    @property
    def w2(self) -> float:
        return math.sqrt(max(self.cost, 0.0))


def _repair_marginals(matrix, row, col, tol):
    """Absorb solver residuals (at most ``tol`` each) into the largest
    entry of the offending row/column; raise if they exceed ``tol``."""
    m = matrix.copy()
    m[m < 0] = 0.0
    for _ in range(3):
        r = row - m.sum(axis=1)
        for a in np.flatnonzero(np.abs(r) > 0):
            m[a, int(np.argmax(m[a]))] += r[a]
        c = col - m.sum(axis=0)
        for b in np.flatnonzero(np.abs(c) > 0):
            m[int(np.argmax(m[:, b])), b] += c[b]
    worst = max(np.max(np.abs(row - m.sum(axis=1))),
                np.max(np.abs(col - m.sum(axis=0))))
    if worst > tol:
        raise RuntimeError(f"marginal repair left defect {worst:g}")
    m[m < 0] = 0.0
    return m


def solve_w2(space: FiniteMMS, mu0, mu1, repair_tol: float = 1e-12) -> TransportResult:
    """LP solve of the squared W2 problem on the marginal supports."""
    mu0, mu1 = _normalized_pair(as_measure(space, mu0), as_measure(space, mu1))
    si, sm = _support(mu0)
    ti, tm = _support(mu1)
    n0, n1 = len(si), len(ti)
    d2 = space.dist[np.ix_(si, ti)] ** 2

    if n0 == 1 or n1 == 1:
        sigma = np.outer(sm, tm) / sm.sum()
    else:
        a_eq = np.zeros((n0 + n1, n0 * n1))
        for a in range(n0):
            a_eq[a, a * n1:(a + 1) * n1] = 1.0
        for b in range(n1):
            a_eq[n0 + b, b::n1] = 1.0
        res = linprog(d2.ravel(), A_eq=a_eq,
                      b_eq=np.concatenate([sm, tm]),
                      bounds=(0, None), method="highs")
        if not res.success:
            raise RuntimeError(f"transport LP failed: {res.message}")
        sigma = res.x.reshape(n0, n1)
    sigma = _repair_marginals(sigma, sm, tm, repair_tol)
    coupling = Coupling(source_idx=si, target_idx=ti, matrix=sigma)
    return TransportResult(coupling=coupling, cost=float((sigma * d2).sum()))


def brute_force_w2(space: FiniteMMS, mu0, mu1) -> float:
    """Exact squared W2 as the minimum over all basic feasible couplings.

    Every vertex of the transport polytope is reachable by repeatedly
    picking a source/target pair and saturating one side with
    min(remaining row, remaining col); the search walks all such
    saturation orders with branch-and-bound and state dominance pruning.
    Supports are limited to 5x5.
    """
    mu0, mu1 = _normalized_pair(as_measure(space, mu0), as_measure(space, mu1))
    si, sm = _support(mu0)
    ti, tm = _support(mu1)
    n0, n1 = len(si), len(ti)
    if n0 > BRUTE_SUPPORT_LIMIT or n1 > BRUTE_SUPPORT_LIMIT:
        raise ValueError("brute force supports at most 5x5 couplings")
    cost = (space.dist[np.ix_(si, ti)] ** 2).tolist()

    best = math.inf
    memo = {}
    stack = [(tuple(sm.tolist()), tuple(tm.tolist()), 0.0)]
    while stack:
        rr, cc, acc = stack.pop()
        if acc >= best:
            continue
        key = (tuple(round(v, 14) for v in rr), tuple(round(v, 14) for v in cc))
        known = memo.get(key)
        if known is not None and known <= acc + 1e-15:
            continue
        memo[key] = acc
        ar = [i for i in range(n0) if rr[i] > MASS_TOL]
        ac = [j for j in range(n1) if cc[j] > MASS_TOL]
        if not ar:
            best = min(best, acc)
            continue
        if len(ar) == 1:
            i = ar[0]
            best = min(best, acc + sum(cc[j] * cost[i][j] for j in ac))
            continue
        if len(ac) == 1:
            j = ac[0]
            best = min(best, acc + sum(rr[i] * cost[i][j] for i in ar))
            continue
        lb_r = sum(rr[i] * min(cost[i][j] for j in ac) for i in ar)
        lb_c = sum(cc[j] * min(cost[i][j] for i in ar) for j in ac)
        if acc + max(lb_r, lb_c) >= best:
            continue
        moves = sorted(((cost[i][j], i, j) for i in ar for j in ac),
                       reverse=True)
        for cij, i, j in moves:
            m = min(rr[i], cc[j])
            r2 = list(rr)
            c2 = list(cc)
            r2[i] = 0.0 if r2[i] - m < MASS_TOL else r2[i] - m
            c2[j] = 0.0 if c2[j] - m < MASS_TOL else c2[j] - m
            stack.append((tuple(r2), tuple(c2), acc + m * cij))
    return best


# === uniqueness ===

@dataclass(frozen=True)
class ProbeResult:
    unique: bool
    deviation: float
    base: TransportResult
    witness: Coupling | None = None


def uniqueness_probe(space: FiniteMMS, mu0, mu1, tol: float = 1e-8,
                     seed: int = 0, draws: int = 3) -> ProbeResult:
    """Look for a second optimal coupling by re-solving on the optimal face
    with random secondary objectives (both signs of each draw)."""
    mu0, mu1 = _normalized_pair(as_measure(space, mu0), as_measure(space, mu1))
    base = solve_w2(space, mu0, mu1)
    si, sm = _support(mu0)
    ti, tm = _support(mu1)
    n0, n1 = len(si), len(ti)
    if n0 == 1 or n1 == 1:
        return ProbeResult(unique=True, deviation=0.0, base=base)
    d2 = (space.dist[np.ix_(si, ti)] ** 2).ravel()
    a_eq = np.zeros((n0 + n1, n0 * n1))
    for a in range(n0):
        a_eq[a, a * n1:(a + 1) * n1] = 1.0
    for b in range(n1):
        a_eq[n0 + b, b::n1] = 1.0
    b_eq = np.concatenate([sm, tm])
    face = base.cost + 1e-9 * max(1.0, abs(base.cost))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        q = rng.standard_normal(n0 * n1)
        for sgn in (1.0, -1.0):
            res = linprog(sgn * q, A_ub=d2[None, :], b_ub=[face],
                          A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                          method="highs")
            if not res.success:
                continue
            other = res.x.reshape(n0, n1)
            dev = float(np.max(np.abs(other - base.coupling.matrix)))
            worst = max(worst, dev)
            if dev > tol:
                witness = Coupling(source_idx=si, target_idx=ti,
                                   matrix=_repair_marginals(other, sm, tm, 1e-10))
                return ProbeResult(unique=False, deviation=dev, base=base,
                                   witness=witness)
    return ProbeResult(unique=True, deviation=worst, base=base)


def is_induced_by_map(coupling: Coupling, tol: float = 1e-9) -> bool:
    """True when every source cell with positive mass feeds exactly one
    target cell (mass above ``tol``)."""
    for a in range(coupling.matrix.shape[0]):
        row = coupling.matrix[a]
        if row.sum() > tol and int((row > tol).sum()) != 1:
            return False
    return True


# === geodesic plans ===

@dataclass(frozen=True)
class GeodesicPlan:
    """Weighted family of discrete geodesics; masses sum to one."""

    atoms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        total = sum(m for _, m in self.atoms)
        if self.atoms and abs(total - 1.0) > 1e-9:
            raise ValueError(f"plan mass {total} is not 1")

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms)


def lift_to_geodesic_plan(space: FiniteMMS, coupling: Coupling,
                          edge_factor: float = 1.5,
                          geodesic_tol: float | None = None) -> GeodesicPlan:
    """One geodesic per positive coupling entry (the first chain returned
    by the shortest-chain search)."""
    atoms = []
    for i, j, m in coupling.entries():
        g = geodesics_between(space, i, j, budget=1, edge_factor=edge_factor,
                              geodesic_tol=geodesic_tol)[0]
        atoms.append((g, m))
    total = sum(m for _, m in atoms)
    atoms = [(g, m / total) for g, m in atoms]
    return GeodesicPlan(atoms=tuple(atoms))


def plan_cost(plan: GeodesicPlan) -> float:
    """Transport cost of a plan: sum of mass times squared length."""
    return sum(m * g.length**2 for g, m in plan.atoms)


def plan_marginals(space: FiniteMMS, plan: GeodesicPlan):
    e0 = np.zeros(space.n)
    e1 = np.zeros(space.n)
    for g, m in plan.atoms:
        e0[g.start] += m
        e1[g.end] += m
    return e0, e1


def pushforward_at(space: FiniteMMS, plan: GeodesicPlan, t: float) -> np.ndarray:
    """Mass vector of the time-t evaluation of the plan."""
    out = np.zeros(space.n)
    for g, m in plan.atoms:
        out[evaluate(g, t)] += m
    return out


# === fixed-set symmetrization competitor ===

def _apply_perm(perm: np.ndarray, g: DiscreteGeodesic) -> DiscreteGeodesic:
    return DiscreteGeodesic(nodes=tuple(int(perm[v]) for v in g.nodes),
                            times=g.times, length=g.length)


def symmetrized_competitor(space: FiniteMMS, perm, plan: GeodesicPlan,
                           x=None, targets=None,
                           fix_tol: float | None = None,
                           iso_tol: float | None = None) -> GeodesicPlan:
    """Swap the two target branches of a plan through an isometry.

    The plan must start on the fixed set of the permutation (within
    ``fix_tol``) and end either in ``{x, perm[x]}`` or, when ``targets``
    is given, in that cell set and its disjoint image.  Atoms landing on
    the first branch are pushed through the permutation, atoms landing on
    the image branch through its inverse; marginals and cost survive
    because the sources are fixed and the map is an isometry.
    """
    perm = np.asarray(perm, dtype=int)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    if iso_tol is None:
        iso_tol = 2 * space.pitch()
    if fix_tol is None:
        fix_tol = space.pitch()
    distortion = float(np.max(np.abs(space.dist[np.ix_(perm, perm)] - space.dist)))
    if distortion > iso_tol:
        raise ValueError(f"permutation distorts distances by {distortion:g}")

    if targets is None:
        if x is None:
            raise ValueError("need either x or targets")
        if perm[x] == x:
            raise ValueError("x must move under the isometry")
        branch1 = {int(x)}
    else:
        branch1 = {int(v) for v in targets}
    branch2 = {int(perm[v]) for v in branch1}
    if branch1 & branch2:
        raise ValueError("target branch meets its image")

    moved = space.dist[np.arange(space.n), perm]
    atoms = []
    for g, m in plan.atoms:
        if moved[g.start] > fix_tol:
            raise ValueError(f"plan source {g.start} is not fixed")
        if g.end in branch1:
            atoms.append((_apply_perm(perm, g), m))
        elif g.end in branch2:
            atoms.append((_apply_perm(inv, g), m))
        else:
            raise ValueError(f"plan target {g.end} is outside both branches")
    return GeodesicPlan(atoms=tuple(atoms))


@dataclass(frozen=True)
class CompetitorReport:
    marginal_defect: float
    cost_defect: float
    plan_difference: float
    marginals_equal: bool
    cost_equal: bool
    distinct: bool

    @property
    def ok(self) -> bool:
        return self.marginals_equal and self.cost_equal and self.distinct


def _atom_table(plan: GeodesicPlan) -> dict:
    table = {}
    for g, m in plan.atoms:
        key = (g.nodes, tuple(round(t, 12) for t in g.times))
        table[key] = table.get(key, 0.0) + m
    return table


def verify_competitor(space: FiniteMMS, plan: GeodesicPlan,
                      competitor: GeodesicPlan,
                      tol: float = 1e-9) -> CompetitorReport:
    """Certify that two plans share marginals and cost yet differ as
    measures on geodesics."""
    e0a, e1a = plan_marginals(space, plan)
    e0b, e1b = plan_marginals(space, competitor)
    marg = max(float(np.max(np.abs(e0a - e0b))),
               float(np.max(np.abs(e1a - e1b))))
    dcost = abs(plan_cost(plan) - plan_cost(competitor))
    ta, tb = _atom_table(plan), _atom_table(competitor)
    diff = 0.0
    for key in set(ta) | set(tb):
        diff += abs(ta.get(key, 0.0) - tb.get(key, 0.0))
    return CompetitorReport(
        marginal_defect=marg,
        cost_defect=dcost,
        plan_difference=diff,
        marginals_equal=marg <= tol,
        cost_equal=dcost <= max(tol, tol * max(1.0, plan_cost(plan))),
        distinct=diff > tol,
    )
