"""Measure contraction checks and the bead-chain spreading schedule.

The contraction inequality compared here is the (2,3) model bound: mass
transported from a point x to a set A and stopped at time t must fit
under the reference measure after weighting by t sin^2(t l)/sin^2(l),
where l is the travel distance.  ``mcp_check`` verifies this cell by
cell in mass units.  ``necklace_schedule`` builds the explicit spreading
plan across a bead chain, and ``schedule_density_check`` certifies its
fiber-aggregated density profile together with the height-ratio law that
drives it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mmslab.core import DiscreteGeodesic, FiniteMMS, constant_speed_defect, evaluate
from mmslab.generators import necklace_fibers
from mmslab.transport import GeodesicPlan, plan_marginals

HALF_PI = math.pi / 2.0
DEGENERATE_LENGTH = 1e-12


def model_coefficient(t, length):
    """Contraction weight t sin^2(t l)/sin^2(l), with the t^3 limit for
    degenerate lengths."""
    t = np.asarray(t, dtype=float)
    length = np.asarray(length, dtype=float)
    small = length < DEGENERATE_LENGTH
    safe = np.where(small, 1.0, length)
    out = t * np.sin(t * safe) ** 2 / np.sin(safe) ** 2
    return np.where(small, t**3, out)


def chebyshev_times(count: int = 33) -> np.ndarray:
    """Chebyshev-spaced samples of [0, 1], endpoints included."""
    if count < 2:
        raise ValueError("need at least two samples")
    j = np.arange(count)
    return (1.0 - np.cos(math.pi * j / (count - 1))) / 2.0


# === the pointwise contraction check ===

@dataclass(frozen=True)
class McpReport:
    ok: bool
    allowance: float
    worst_slack: float
    worst_t: float
    worst_cell: int
    mass_target: float
    marginal_defect: float
    rows: tuple                  # worst cell per t: (t, cell, lhs, rhs, slack)


def mcp_check(space: FiniteMMS, plan: GeodesicPlan,
              t_samples=None, allowance: float | None = None) -> McpReport:
    """Cell-by-cell contraction inequality for a point-to-set plan.

    For every sampled time the transported mass landing in a cell,
    weighted by the model coefficient and by the target mass, must stay
    below the cell weight up to ``allowance`` (mass units, default eight
    grid pitches).
    """
    if t_samples is None:
        t_samples = chebyshev_times()
    if allowance is None:
        allowance = 8.0 * space.pitch()

    e0, e1 = plan_marginals(space, plan)
    if int((e0 > 1e-12).sum()) != 1:
        raise ValueError("plan must start from a single cell")
    support = np.flatnonzero(e1 > 1e-12)
    mass_target = float(space.weight[support].sum())
    uniform = np.zeros(space.n)
    uniform[support] = space.weight[support] / mass_target
    marginal_defect = float(np.max(np.abs(e1 - uniform)))

    worst = (math.inf, 0.0, -1)
    rows = []
    for t in np.sort(np.asarray(t_samples, dtype=float)):
        lhs = np.zeros(space.n)
        for g, m in plan.atoms:
            coef = float(model_coefficient(t, g.length))
            lhs[evaluate(g, float(t))] += m * coef * mass_target
        touched = np.flatnonzero(lhs > 0)
        if len(touched) == 0:
            continue
        slack = space.weight[touched] - lhs[touched]
        k = int(np.argmin(slack))
        cell = int(touched[k])
        rows.append((float(t), cell, float(lhs[cell]),
                     float(space.weight[cell]), float(slack[k])))
        if slack[k] < worst[0]:
            worst = (float(slack[k]), float(t), cell)

    return McpReport(
        ok=bool(worst[0] + allowance >= 0.0),
        allowance=float(allowance),
        worst_slack=worst[0],
        worst_t=worst[1],
        worst_cell=worst[2],
        mass_target=mass_target,
        marginal_defect=marginal_defect,
        rows=tuple(rows),
    )


# === the bead-chain schedule ===

@dataclass(frozen=True)
class Schedule:
    """Spreading plan across a bead chain with its landmark times."""

    plan: GeodesicPlan
    source: int
    target_cells: tuple
    spread_cells: tuple
    x_source: float
    x_spread: float              # snapped fiber abscissa of the spread set
    x_spread_exact: float        # closed-form abscissa before snapping
    x_target: float
    length: float
    t_spread: float
    t_flat_start: float
    t_flat_end: float
    kappa_spread: int
    kappa_target: int
    fiber_count_spread: int
    fiber_count_target: int
    max_segment_slope: float
    worst_speed_defect: float


def _bead_height(x, bead_x, bead_r, width_factor):
    return width_factor * max(bead_r / 4.0 - abs(x - bead_x), 0.0)


def _path_y(breaks, x):
    xs = [p[0] for p in breaks]
    ys = [p[1] for p in breaks]
    return float(np.interp(x, xs, ys))


def necklace_schedule(space: FiniteMMS, source: int, target_fiber: int,
                      target_count: int,
                      geodesic_tol: float | None = None) -> Schedule:
    """Spread a point mass sitting in one bead over a centered block of
    cells on a fiber of a bead further right.

    The plan first fans out to a spread fiber inside the source bead
    (placed one fifth of the way from the source abscissa to the bead's
    right edge, measured after a 4/5 contraction toward it), rides the
    bead tents down to the axis, crosses the gap flat, and fans into the
    target cells.  Atom masses are uniform, so both marginals are exact.
    All atoms share the length x_target - x_source; nodes sit on every
    fiber in between, so the spread time is an exact node time while the
    two bead-edge times fall between columns.
    """
    fiber_of_cell, fx, fh, fcount, fstart, bead_of_fiber = necklace_fibers(space)
    beads = space.meta["beads"]
    pitch = space.pitch()
    if geodesic_tol is None:
        geodesic_tol = 2.0 * pitch

    f_src = int(fiber_of_cell[source])
    b_src = int(bead_of_fiber[f_src])
    b_tgt = int(bead_of_fiber[target_fiber])
    if b_src < 0 or b_tgt < 0:
        raise ValueError("source and target must sit inside beads")
    if b_tgt <= b_src:
        raise ValueError("target bead must lie to the right of the source bead")
    x1, r1 = beads[b_src]
    x2, r2 = beads[b_tgt]
    x_src = float(fx[f_src])
    y_src = _cell_y(space, fstart, fcount, fh, f_src, source)
    x_tgt = float(fx[target_fiber])
    k_tgt = int(fcount[target_fiber])
    if not 2 <= target_count <= k_tgt or target_count % 2:
        raise ValueError("target count must be even and fit the fiber")

    # spread abscissa: contract toward the source, then step a fifth of
    # the remaining way into the bead
    x_hat_exact = x1 + (r1 / 4.0 + 4.0 * (x_src - x1)) / 5.0
    f_hat = int(np.argmin(np.abs(fx - x_hat_exact)))
    if bead_of_fiber[f_hat] != b_src:
        raise ValueError("spread fiber escapes the source bead")
    x_hat = float(fx[f_hat])
    k_hat = int(fcount[f_hat])
    kappa = 2 * round(k_hat * target_count / (2.0 * k_tgt))
    kappa = int(min(max(kappa, 2), k_hat))

    length = x_tgt - x_src
    right_edge = x1 + r1 / 4.0
    left_edge = x2 - r2 / 4.0
    lo = int(fstart[f_hat] + (k_hat - kappa) // 2)
    spread_cells = tuple(range(lo, lo + kappa))
    lo = int(fstart[target_fiber] + (k_tgt - target_count) // 2)
    target_cells = tuple(range(lo, lo + target_count))

    fibers = range(f_src, target_fiber + 1)
    atoms = []
    slope_max = 0.0
    defect_max = 0.0
    for ci in spread_cells:
        y_hat = _cell_y(space, fstart, fcount, fh, f_hat, ci)
        for cj in target_cells:
            y_tgt = _cell_y(space, fstart, fcount, fh, target_fiber, cj)
            breaks = [(x_src, y_src), (x_hat, y_hat)]
            if x_hat < x1:
                # ride the tent ray through the apex fiber before falling
                breaks.append((x1, y_hat * (r1 / 4.0) / (x_hat - (x1 - r1 / 4.0))))
            breaks.append((right_edge, 0.0))
            breaks.append((left_edge, 0.0))
            if x_tgt > x2:
                # enter through the apex of the target bead
                breaks.append((x2, y_tgt * (r2 / 4.0) / ((x2 + r2 / 4.0) - x_tgt)))
            breaks.append((x_tgt, y_tgt))
            for (xa, ya), (xb, yb) in zip(breaks, breaks[1:]):
                if xb - xa > 1e-15:
                    slope_max = max(slope_max, abs(yb - ya) / (xb - xa))
            nodes = []
            for k in fibers:
                want = _path_y(breaks, float(fx[k]))
                cells = np.arange(fstart[k], fstart[k] + fcount[k])
                ys = _fiber_ys(fcount, fh, k)
                nodes.append(int(cells[np.argmin(np.abs(ys - want))]))
            times = tuple((float(fx[k]) - x_src) / length for k in fibers)
            g = DiscreteGeodesic(nodes=tuple(nodes), times=times, length=length)
            defect_max = max(defect_max, constant_speed_defect(space, g))
            atoms.append((g, 1.0 / (kappa * target_count)))
    if defect_max > geodesic_tol:
        raise ValueError(
            f"schedule atoms miss constant speed by {defect_max:g}"
            f" (tolerance {geodesic_tol:g})")

    return Schedule(
        plan=GeodesicPlan(atoms=tuple(atoms)),
        source=int(source),
        target_cells=target_cells,
        spread_cells=spread_cells,
        x_source=x_src,
        x_spread=x_hat,
        x_spread_exact=float(x_hat_exact),
        x_target=x_tgt,
        length=float(length),
        t_spread=(x_hat - x_src) / length,
        t_flat_start=(right_edge - x_src) / length,
        t_flat_end=(left_edge - x_src) / length,
        kappa_spread=kappa,
        kappa_target=int(target_count),
        fiber_count_spread=k_hat,
        fiber_count_target=k_tgt,
        max_segment_slope=float(slope_max),
        worst_speed_defect=float(defect_max),
    )


def _fiber_ys(fcount, fh, k):
    n = int(fcount[k])
    h = float(fh[k])
    if n == 1:
        return np.zeros(1)
    return -h + (np.arange(n) + 0.5) * (2.0 * h / n)


def _cell_y(space, fstart, fcount, fh, fiber, cell):
    return float(_fiber_ys(fcount, fh, fiber)[cell - int(fstart[fiber])])


# === aggregated density profile of a schedule ===

@dataclass(frozen=True)
class DensityReport:
    ok: bool
    allowance: float
    worst_slack: float
    worst_t: float
    rows: tuple                  # (t, support mass, lhs, rhs, slack)
    ratio_defect: float
    height_rows: tuple           # (t, ratio, bound, ok)
    heights_ok: bool
    marginal_defect: float

    @property
    def all_ok(self) -> bool:
        return self.ok and self.heights_ok


def schedule_density_check(space: FiniteMMS, sched: Schedule,
                           allowance: float | None = None) -> DensityReport:
    """Fiber-aggregated density bound for a bead-chain schedule.

    At every node time t > 0, and at the three landmark times of the
    schedule, the average interpolant density, normalized by the target
    mass, must stay below the model profile:
    m(A)/(t m(supp_t)) <= sin^2(l)/(t sin^2(t l)) + allowance.  At t = 1
    the two sides agree exactly.  The report also carries the grid ratio
    defect between the spread and target fibers and the height-ratio law
    h(x_t)/h(x_spread) <= 5/4 - t/4 for t up to the spread time,
    evaluated with the closed-form bead profile.

    The certificate is sharp when the target fiber sits on the rising
    slope of its bead: there the ray bundle compresses and the occupied
    cells over-cover it.  Entering through the bead apex instead thins
    the discrete support on the descent (rays skip cells on taller
    fibers), which inflates the left side by a grid-count factor and can
    fail the bound even though the plan itself is sound.
    """
    if allowance is None:
        allowance = 8.0 * space.pitch()
    beads = space.meta["beads"]
    width_factor = space.meta["width_factor"]
    _, fx, _, _, _, bead_of_fiber = necklace_fibers(space)

    plan = sched.plan
    e0, e1 = plan_marginals(space, plan)
    uniform = np.zeros(space.n)
    idx = np.asarray(sched.target_cells)
    uniform[idx] = space.weight[idx] / space.weight[idx].sum()
    marginal_defect = max(
        float(np.max(np.abs(e1 - uniform))),
        float(abs(e0[sched.source] - 1.0)))

    mass_target = float(space.weight[idx].sum())
    l = sched.length
    # node times plus the landmark times; the bead edges fall between
    # fiber columns, so they are not node times and must be added
    times = sorted(set(plan.atoms[0][0].times)
                   | {sched.t_spread, sched.t_flat_start, sched.t_flat_end})
    rows = []
    worst = (math.inf, 0.0)
    for t in times:
        if t <= 0.0:
            continue
        supp = {evaluate(g, t) for g, _ in plan.atoms}
        supp_mass = float(space.weight[sorted(supp)].sum())
        lhs = mass_target / (t * supp_mass)
        rhs = math.sin(l) ** 2 / (t * math.sin(t * l) ** 2)
        slack = rhs - lhs
        rows.append((float(t), supp_mass, lhs, rhs, slack))
        if slack < worst[0]:
            worst = (slack, float(t))

    rho_hat = sched.fiber_count_spread / sched.kappa_spread
    rho_tgt = sched.fiber_count_target / sched.kappa_target
    ratio_defect = abs(rho_hat / rho_tgt - 1.0)

    # height-ratio law along the first leg, from the closed-form profile
    b_src = int(bead_of_fiber[np.argmin(np.abs(fx - sched.x_spread))])
    bx, br = beads[b_src]
    h_spread = _bead_height(sched.x_spread_exact, bx, br, width_factor)
    height_rows = []
    heights_ok = True
    for t in times:
        if t > sched.t_spread + 1e-15:
            break
        x_t = sched.x_source + t * l
        ratio = _bead_height(x_t, bx, br, width_factor) / h_spread
        bound = 1.25 - t / 4.0
        ok = bool(ratio <= bound + 1e-9)
        heights_ok = heights_ok and ok
        height_rows.append((float(t), float(ratio), float(bound), ok))

    return DensityReport(
        ok=bool(worst[0] + allowance >= 0.0),
        allowance=float(allowance),
        worst_slack=worst[0],
        worst_t=worst[1],
        rows=tuple(rows),
        ratio_defect=float(ratio_defect),
        height_rows=tuple(height_rows),
        heights_ok=heights_ok,
        marginal_defect=marginal_defect,
    )


# === the scalar coefficient bound ===

@dataclass(frozen=True)
class ScalarBoundReport:
    ok: bool
    min_margin: float
    argmin_t: float
    argmin_d: float
    samples: int


def scalar_bound(t_max: float = 0.2, d_max: float = HALF_PI + 0.25,
                 samples: int = 2000, cushion: float = 1e-12) -> ScalarBoundReport:
    """Grid check of 5/4 - t/4 <= t sin^2(d)/sin^2(t d) on
    (0, t_max] x (0, d_max]."""
    t = np.linspace(1e-9, t_max, samples)[:, None]
    d = np.linspace(1e-6, d_max, samples)[None, :]
    margin = t * np.sin(d) ** 2 / np.sin(t * d) ** 2 - (1.25 - t / 4.0)
    k = int(np.argmin(margin))
    i, j = divmod(k, samples)
    worst = float(margin[i, j])
    return ScalarBoundReport(
        ok=bool(worst >= -cushion),
        min_margin=worst,
        argmin_t=float(t[i, 0]),
        argmin_d=float(d[0, j]),
        samples=samples,
    )
