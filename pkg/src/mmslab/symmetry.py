"""Isometry groups of finite metric measure spaces.

Isometries are permutations of the cells whose worst distance distortion
stays below a tolerance (two grid pitches by default); each carries its
measured distortion and weight defect.  On top of the enumeration sit
fixed sets, the displacement functional over half-radius balls, subgroup
closures, the small-subgroup probe, a closed-form power-escape check for
Euclidean motions, and the fixed-mass versus displacement comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur
from scipy.optimize import brentq

from mmslab.core import FiniteMMS, ball_indices

DEFAULT_NODE_BUDGET = 5_000_000
DEFAULT_GROUP_BUDGET = 4096


# === maps and groups ===

@dataclass(frozen=True)
class IsometryMap:
    perm: tuple
    distortion: float
    measure_defect: float

    def is_measure_preserving(self, tol: float = 1e-9) -> bool:
        return self.measure_defect <= tol

    def as_array(self) -> np.ndarray:
        return np.asarray(self.perm, dtype=int)


def isometry_from_perm(space: FiniteMMS, perm) -> IsometryMap:
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(space.n)):
        raise ValueError("not a permutation of the cells")
    distortion = float(np.max(np.abs(space.dist[np.ix_(perm, perm)] - space.dist)))
    defect = float(np.max(np.abs(space.weight[perm] - space.weight)))
    return IsometryMap(perm=tuple(int(v) for v in perm),
                       distortion=distortion, measure_defect=defect)


def compose(outer, inner) -> tuple:
    """Permutation of ``outer after inner``: i -> outer[inner[i]]."""
    outer = np.asarray(outer, dtype=int)
    inner = np.asarray(inner, dtype=int)
    return tuple(int(v) for v in outer[inner])


def invert(perm) -> tuple:
    perm = np.asarray(perm, dtype=int)
    out = np.empty_like(perm)
    out[perm] = np.arange(len(perm))
    return tuple(int(v) for v in out)


@dataclass(frozen=True)
class Subgroup:
    elements: tuple            # permutation tuples, sorted
    generators: tuple
    closed: bool

    def __len__(self):
        return len(self.elements)

    def __contains__(self, perm):
        return tuple(perm) in set(self.elements)


@dataclass(frozen=True)
class EnumerationResult:
    maps: tuple                # IsometryMap, sorted by permutation
    complete: bool
    nodes: int

    def perms(self) -> tuple:
        return tuple(m.perm for m in self.maps)


def _perms_of(group) -> list:
    if isinstance(group, Subgroup):
        return [np.asarray(p, dtype=int) for p in group.elements]
    if isinstance(group, EnumerationResult):
        return [np.asarray(m.perm, dtype=int) for m in group.maps]
    if isinstance(group, IsometryMap):
        return [group.as_array()]
    group = list(group)
    if group and np.isscalar(group[0]):
        return [np.asarray(group, dtype=int)]
    return [np.asarray(m.perm if isinstance(m, IsometryMap) else m, dtype=int)
            for m in group]


# === enumeration ===

def enumerate_isometries(space: FiniteMMS, iso_tol: float | None = None,
                         budget: int = DEFAULT_NODE_BUDGET) -> EnumerationResult:
    """All cell permutations with distance distortion at most ``iso_tol``.

    Candidate targets are prefiltered by sorted distance-row profiles
    (a necessary condition for bounded distortion), then extended source
    by source, most constrained first, with incremental distance checks
    against everything already assigned.  The search counts extension
    attempts as nodes; past ``budget`` it stops and flags the result
    incomplete rather than failing.
    """
    if iso_tol is None:
        iso_tol = 2.0 * space.pitch()
    n = space.n
    dist = space.dist
    profiles = np.sort(dist, axis=1)
    cand = [np.flatnonzero(np.max(np.abs(profiles - profiles[i]), axis=1)
                           <= iso_tol) for i in range(n)]
    order = sorted(range(n), key=lambda i: (len(cand[i]), i))
    src_so_far = np.asarray(order)

    perm = np.full(n, -1, dtype=int)
    used = np.zeros(n, dtype=bool)
    found = []
    nodes = 0
    complete = True

    # iterative depth-first search; iters[d] walks cand[order[d]]
    iters = [iter(cand[order[0]])]
    while iters:
        depth = len(iters) - 1
        i = order[depth]
        j = next(iters[-1], None)
        if j is None:
            iters.pop()
            if depth > 0:
                prev = order[depth - 1]
                used[perm[prev]] = False
                perm[prev] = -1
            continue
        if used[j]:
            continue
        nodes += 1
        if nodes > budget:
            complete = False
            break
        if depth:
            asrc = src_so_far[:depth]
            if np.max(np.abs(dist[i, asrc] - dist[j, perm[asrc]])) > iso_tol:
                continue
        if depth == n - 1:
            perm[i] = j
            found.append(tuple(int(v) for v in perm))
            perm[i] = -1
            continue
        perm[i] = j
        used[j] = True
        iters.append(iter(cand[order[depth + 1]]))

    maps = tuple(isometry_from_perm(space, p) for p in sorted(found))
    return EnumerationResult(maps=maps, complete=complete, nodes=nodes)


def generate_subgroup(space: FiniteMMS, gens,
                      budget: int = DEFAULT_GROUP_BUDGET) -> Subgroup:
    """Closure of the generators under composition and inverse, breadth
    first, truncated (and flagged open) past ``budget`` elements."""
    gen_perms = [tuple(int(v) for v in p) for p in _perms_of(gens)]
    identity = tuple(range(space.n))
    seeds = set(gen_perms) | {invert(p) for p in gen_perms} | {identity}
    elements = set(seeds)
    frontier = list(seeds)
    closed = True
    while frontier:
        nxt = []
        for a in frontier:
            for b in seeds:
                c = compose(a, b)
                if c not in elements:
                    elements.add(c)
                    nxt.append(c)
        if len(elements) > budget:
            closed = False
            break
        frontier = nxt
    return Subgroup(elements=tuple(sorted(elements)),
                    generators=tuple(sorted(set(gen_perms))),
                    closed=closed)


# === fixed sets and displacement ===

@dataclass(frozen=True)
class FixedSet:
    indices: tuple
    mass: float
    ball_masses: tuple = field(default_factory=tuple)


def fixed_set(space: FiniteMMS, perm, fix_tol: float | None = None,
              balls=()) -> FixedSet:
    """Cells moved by at most ``fix_tol`` (one grid pitch by default),
    their mass, and optionally the fixed mass inside balls given as
    (center, radius) pairs."""
    if fix_tol is None:
        fix_tol = space.pitch()
    perm = _perms_of(perm)[0]
    moved = space.dist[np.arange(space.n), perm]
    idx = np.flatnonzero(moved <= fix_tol)
    inside = []
    for center, radius in balls:
        bidx = ball_indices(space, int(center), float(radius))
        keep = bidx[moved[bidx] <= fix_tol]
        inside.append(float(space.weight[keep].sum()))
    return FixedSet(indices=tuple(int(v) for v in idx),
                    mass=float(space.weight[idx].sum()),
                    ball_masses=tuple(inside))


def displacement(space: FiniteMMS, group, r: float, x: int) -> float:
    """Largest move of any group element on the closed half-radius ball:
    sup over g and over y within r/2 of x of d(y, g(y))."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    idx = ball_indices(space, x, r / 2.0)
    out = 0.0
    for perm in _perms_of(group):
        out = max(out, float(space.dist[idx, perm[idx]].max()))
    return out


# === small subgroups ===

@dataclass(frozen=True)
class SubgroupProbe:
    found: bool
    inconclusive: bool
    epsilon: float
    subgroup: Subgroup | None = None
    sup_displacement: float = 0.0
    candidates: int = 0


def small_subgroup_probe(space: FiniteMMS, epsilon: float, compact=None,
                         budget: int = DEFAULT_GROUP_BUDGET,
                         iso_tol: float | None = None,
                         maps: EnumerationResult | None = None) -> SubgroupProbe:
    """Look for a nontrivial subgroup whose elements all move the compact
    set ``compact`` (every cell by default) by less than ``epsilon``.

    Filters the enumerated isometries to the small movers, closes each
    candidate, and returns the first closure that stays inside the
    filter.  An incomplete enumeration makes a negative answer
    inconclusive.
    """
    if maps is None:
        maps = enumerate_isometries(space, iso_tol=iso_tol)
    if compact is None:
        compact = np.arange(space.n)
    compact = np.asarray(list(compact), dtype=int)
    identity = tuple(range(space.n))

    def sup_move(perm):
        perm = np.asarray(perm, dtype=int)
        return float(space.dist[compact, perm[compact]].max())

    small = [m.perm for m in maps.maps
             if m.perm != identity and sup_move(m.perm) < epsilon]
    for perm in small:
        sub = generate_subgroup(space, [perm], budget=budget)
        if not sub.closed:
            continue
        sups = [sup_move(p) for p in sub.elements]
        if max(sups) < epsilon and len(sub) > 1:
            return SubgroupProbe(found=True, inconclusive=False,
                                 epsilon=epsilon, subgroup=sub,
                                 sup_displacement=max(sups),
                                 candidates=len(small))
    return SubgroupProbe(found=False, inconclusive=not maps.complete,
                         epsilon=epsilon, candidates=len(small))


# === Euclidean power escape ===

@dataclass(frozen=True)
class EuclideanIsometry:
    """Rigid motion y -> Q y + v of R^k."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if q.shape[0] != q.shape[1] or q.shape[0] != v.shape[0]:
            raise ValueError("shape mismatch between Q and v")
        if np.max(np.abs(q.T @ q - np.eye(q.shape[0]))) > 1e-12:
            raise ValueError("Q is not orthogonal")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def k(self) -> int:
        return self.q.shape[0]

    def is_identity(self, tol: float = 1e-12) -> bool:
        return (float(np.max(np.abs(self.q - np.eye(self.k)))) +
                float(np.linalg.norm(self.v))) <= tol


@dataclass(frozen=True)
class EscapeResult:
    found: bool
    n: int
    displacement: float
    threshold: float
    max_pow: int


def _block_data(iso: EuclideanIsometry):
    """Split the motion into spectral blocks: rotation angles and the
    translation component inside each block."""
    t, z = schur(iso.q, output="real")
    w = z.T @ iso.v
    blocks = []          # (kind, angle, |v_block|); kind in {rot, flip, keep}
    i = 0
    k = iso.k
    while i < k:
        if i + 1 < k and abs(t[i + 1, i]) > 1e-12:
            # only the magnitude of the rotation angle enters the amplitudes
            angle = abs(math.atan2(t[i + 1, i], t[i, i]))
            blocks.append(("rot", angle, float(np.hypot(w[i], w[i + 1]))))
            i += 2
        elif t[i, i] < 0:
            blocks.append(("flip", math.pi, float(abs(w[i]))))
            i += 1
        else:
            blocks.append(("keep", 0.0, float(abs(w[i]))))
            i += 1
    return blocks


def _block_amplitudes(blocks, n):
    """Per block: operator amplitude of Q^n - I and norm of the
    accumulated translation sum_{j<n} Q^j v."""
    sig, trans = [], []
    for kind, angle, vn in blocks:
        if kind == "rot":
            s = abs(2.0 * math.sin(n * angle / 2.0))
            half = math.sin(angle / 2.0)
            c = vn * abs(math.sin(n * angle / 2.0) / half)
        elif kind == "flip":
            s = 2.0 * (n % 2)
            c = vn * (n % 2)
        else:
            s = 0.0
            c = vn * n
        sig.append(s)
        trans.append(c)
    return np.asarray(sig), np.asarray(trans)


def _sup_on_half_ball(sig, trans):
    """Exact sup of |(Q^n - I) y + c| over |y| <= 1/2, given per-block
    amplitudes.

    The objective is convex, so the maximum sits on the sphere; the
    multiplier equation t_i = s_i c_i / (lam - s_i^2) covers the generic
    case, and when the strongest blocks carry no translation the leftover
    radius goes to one of them at lam = s_max^2 (the hard case)."""
    live = sig > 1e-15
    dead = float(np.sum(trans[~live] ** 2))
    if not live.any():
        return math.sqrt(dead)
    s, c = sig[live], trans[live]
    smax = float(np.max(s))
    tie = s >= smax * (1.0 - 1e-12)
    lo = smax**2

    def excess(lam):
        t = s * c / (lam - s**2)
        return float(np.sum(t**2)) - 0.25

    eps = max(lo, 1e-30) * 1e-12
    if np.any(tie & (c > 0.0)) or excess(lo + eps) > 0.0:
        hi = lo + eps
        while excess(hi) > 0.0:
            hi = 2.0 * hi + 1.0
        lam = brentq(excess, lo + eps, hi, xtol=1e-18, rtol=1e-13)
        t = s * c / (lam - s**2)
        slack = 0.0
    else:
        t = np.zeros_like(s)
        t[~tie] = s[~tie] * c[~tie] / (lo - s[~tie] ** 2)
        slack = max(0.25 - float(np.sum(t**2)), 0.0)
    return math.sqrt(float(np.sum((s * t + c) ** 2)) + lo * slack + dead)


def euclidean_power_escape(iso: EuclideanIsometry, threshold: float = 0.05,
                           max_pow: int = 10_000_000) -> EscapeResult:
    """Smallest power n whose displacement on the closed ball of radius
    1/2 around the origin reaches ``threshold``.

    The displacement of g^n is evaluated in closed form from the
    spectral blocks of Q and the accumulated translation, so powers are
    scanned without iterating the map.  Cheap bounds locate the first
    candidate range; the exact supremum decides inside it.
    """
    if iso.is_identity():
        raise ValueError("the identity never escapes")
    blocks = _block_data(iso)
    chunk = 4096                 # grows geometrically; escapes are usually early
    best_ub, best_n = -1.0, 1
    start = 1
    while start <= max_pow:
        ns = np.arange(start, min(start + chunk - 1, max_pow) + 1, dtype=float)
        terms = []
        for kind, angle, vn in blocks:
            if kind == "rot":
                amp = np.abs(2.0 * np.sin(ns * angle / 2.0))
                tr = vn * amp / (2.0 * math.sin(angle / 2.0))
            elif kind == "flip":
                amp = 2.0 * (ns % 2)
                tr = vn * (ns % 2)
            else:
                amp = np.zeros_like(ns)
                tr = vn * ns
            terms.append(amp / 2.0 + tr)
        ub = np.sqrt(np.sum(np.stack(terms) ** 2, axis=0))
        top = int(np.argmax(ub))
        if ub[top] > best_ub:
            best_ub, best_n = float(ub[top]), start + top
        hit = np.flatnonzero(ub >= threshold)
        if len(hit):
            # the exact supremum decides from the first candidate on; once
            # one block alone clears the threshold the walk stops, so the
            # gap between bound and verdict stays short
            n = start + int(hit[0])
            while n <= max_pow:
                sup = _sup_on_half_ball(*_block_amplitudes(blocks, n))
                if sup >= threshold:
                    return EscapeResult(found=True, n=n,
                                        displacement=float(sup),
                                        threshold=threshold, max_pow=max_pow)
                n += 1
            break
        start += chunk
        chunk = min(chunk * 8, 1_048_576)
    sup = _sup_on_half_ball(*_block_amplitudes(blocks, best_n))
    return EscapeResult(found=False, n=0, displacement=float(sup),
                        threshold=threshold, max_pow=max_pow)


# === fixed mass versus displacement ===

@dataclass(frozen=True)
class ConditionAReport:
    holds: bool
    vacuous: bool
    complete: bool
    fix_sup: float
    ball_mass: float
    gap: float
    normalized_gap: float
    nontrivial: int


def condition_a_scan(space: FiniteMMS, x: int, s: float,
                     iso_tol: float | None = None,
                     fix_tol: float | None = None,
                     maps: EnumerationResult | None = None) -> ConditionAReport:
    """Largest fixed mass any nontrivial isometry keeps inside the ball
    of radius ``s`` around ``x``, against the ball's own mass.

    The condition holds when the gap is strictly positive.  With no
    nontrivial isometries the supremum is vacuous and reported as zero,
    the strongest possible verdict.
    """
    if maps is None:
        maps = enumerate_isometries(space, iso_tol=iso_tol)
    identity = tuple(range(space.n))
    ball_mass = float(space.weight[ball_indices(space, x, s)].sum())
    fix_sup = 0.0
    count = 0
    for m in maps.maps:
        if m.perm == identity:
            continue
        count += 1
        inside = fixed_set(space, m.perm, fix_tol=fix_tol,
                           balls=[(x, s)]).ball_masses[0]
        fix_sup = max(fix_sup, inside)
    gap = ball_mass - fix_sup
    return ConditionAReport(
        holds=bool(gap > 0.0),
        vacuous=count == 0,
        complete=maps.complete,
        fix_sup=fix_sup,
        ball_mass=ball_mass,
        gap=gap,
        normalized_gap=gap / ball_mass if ball_mass > 0 else math.inf,
        nontrivial=count,
    )


@dataclass(frozen=True)
class LargeFixReport:
    ok: bool
    hypothesis_holds: bool
    conclusion_holds: bool
    xi: float
    moved_mass: float
    min_small_ball: float
    displacement_sup: float
    bound: float


def large_fix_implies_small_displacement(space: FiniteMMS, perm, x: int,
                                         n_scale: int,
                                         fix_tol: float | None = None) -> LargeFixReport:
    """Quantitative fixed-mass criterion at scale N = ``n_scale``.

    xi is the normalized worst mass of the small balls B_{1/N}(y) inside
    B_N(x).  If the moved mass inside B_N(x) is smaller than every such
    small ball, then no point of B_N(x) can move further than 2/N, up to
    one grid pitch of slack.  The report carries both sides and whether
    the implication was exercised or held vacuously.
    """
    if fix_tol is None:
        fix_tol = space.pitch()
    perm = _perms_of(perm)[0]
    big = ball_indices(space, x, float(n_scale))
    big_mass = float(space.weight[big].sum())
    small = min(
        float(space.weight[big[space.dist[y, big] <= 1.0 / n_scale]].sum())
        for y in big)
    xi = small / big_mass

    moved = space.dist[big, perm[big]]
    moved_mass = float(space.weight[big[moved > fix_tol]].sum())
    disp = float(moved.max())
    bound = 2.0 / n_scale + space.pitch()
    hypothesis = moved_mass < small
    conclusion = disp < bound
    return LargeFixReport(
        ok=(not hypothesis) or conclusion,
        hypothesis_holds=hypothesis,
        conclusion_holds=conclusion,
        xi=xi,
        moved_mass=moved_mass,
        min_small_ball=small,
        displacement_sup=disp,
        bound=bound,
    )


# === the critical displacement scale ===

@dataclass(frozen=True)
class CriticalScale:
    r: float
    bracket: tuple
    displacement: float
    defect: float


def critical_scale(space: FiniteMMS, group, x: int, lo: float, hi: float,
                   tol: float = 1e-6) -> CriticalScale:
    """Bracket the radius where the displacement functional crosses
    r/20, by bisection from a bracketing pair.

    Requires displacement at ``lo`` to sit at or above lo/20 and at
    ``hi`` strictly below hi/20; the functional is a step function of r,
    so the result is a bracket of width ``tol`` and the defect achieved
    at its left end.
    """
    perms = _perms_of(group)
    d_lo = displacement(space, perms, lo, x)
    d_hi = displacement(space, perms, hi, x)
    if d_lo < lo / 20.0 or d_hi >= hi / 20.0:
        raise ValueError("no crossing inside the bracket")
    a, b = lo, hi
    while b - a > tol:
        mid = (a + b) / 2.0
        if displacement(space, perms, mid, x) >= mid / 20.0:
            a = mid
        else:
            b = mid
    d = displacement(space, perms, a, x)
    return CriticalScale(r=a, bracket=(a, b), displacement=d,
                         defect=abs(d - a / 20.0))
