"""Constructors for the example spaces used throughout the package.

Five families: a cos^2-weighted segment, intrinsic circles, wedge-of-circles
truncations, necklace spaces (segments with diamond-shaped 2D beads under the
intrinsic L-infinity metric), and Euclidean ball grids.  Every constructor
records its grid pitch in ``meta`` so downstream tolerances can scale with
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from mmslab.core import FiniteMMS

HALF_PI = math.pi / 2.0

# Diamond boundary slope: beads are {|y| <= (1/4 r - |x - x_k|)/9}.
DIAMOND_SLOPE = 1.0 / 9.0


# === 1D segment ===

def segment_space(resolution: float) -> FiniteMMS:
    """Weighted segment [0, pi/2] with density cos^2(x).

    Cells are uniform intervals with midpoint coordinates; the weight of a
    cell is cos^2(midpoint) times the cell width, so the total mass is the
    midpoint-rule approximation of pi/4.
    """
    if not 0 < resolution < HALF_PI:
        raise ValueError("resolution must lie in (0, pi/2)")
    n = max(2, round(HALF_PI / resolution))
    w = HALF_PI / n
    x = (np.arange(n) + 0.5) * w
    dist = np.abs(x[:, None] - x[None, :])
    weight = np.cos(x) ** 2 * w
    coords = np.column_stack([x, np.zeros(n)])
    meta = {"generator": "segment", "pitch": w, "cells": n, "length": HALF_PI}
    return FiniteMMS(dist=dist, weight=weight, coords=coords, meta=meta)


# === circles and wedges ===

def circle_space(radius: float, resolution: int) -> FiniteMMS:
    """Circle of the given radius with intrinsic (arc-length) distance and
    uniform 1D Hausdorff weights; ``resolution`` counts cells."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    m = int(resolution)
    if m < 3:
        raise ValueError("need at least 3 cells")
    circumference = 2 * math.pi * radius
    arc = circumference * np.arange(m) / m
    gap = np.abs(arc[:, None] - arc[None, :])
    dist = np.minimum(gap, circumference - gap)
    theta = 2 * math.pi * np.arange(m) / m
    coords = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    meta = {"generator": "circle", "pitch": circumference / m,
            "radius": radius, "cells": m}
    return FiniteMMS(dist=dist, weight=np.full(m, circumference / m),
                     coords=coords, meta=meta)


def hawaiian_truncation(n: int, resolution: int) -> FiniteMMS:
    """Wedge of circles of radii 1/k^2, k = 1..n, glued at one base cell.

    Distances are intrinsic: along the own circle, or through the base when
    the endpoints sit on different circles.  The base cell carries one cell
    length from every incident circle, so the total mass is exactly the sum
    of the circumferences.
    """
    if n < 1:
        raise ValueError("need at least one circle")
    m = int(resolution)
    if m < 3:
        raise ValueError("need at least 3 cells per circle")
    lengths = [2 * math.pi / k**2 for k in range(1, n + 1)]

    circle_of_cell = [-1]          # base cell first
    arc_of_cell = [0.0]            # arc position along the own circle
    weights = [sum(L / m for L in lengths)]
    for k, L in enumerate(lengths):
        for j in range(1, m):
            circle_of_cell.append(k)
            arc_of_cell.append(L * j / m)
            weights.append(L / m)

    cnum = np.asarray(circle_of_cell)
    arc = np.asarray(arc_of_cell)
    length_of_cell = np.where(cnum >= 0, np.asarray(lengths + [1.0])[cnum], 1.0)
    # distance to the base along the own circle (0 for the base itself)
    d_base = np.minimum(arc, length_of_cell - arc)
    d_base[0] = 0.0

    same = cnum[:, None] == cnum[None, :]
    gap = np.abs(arc[:, None] - arc[None, :])
    own = np.minimum(gap, length_of_cell[:, None] - gap)
    through = d_base[:, None] + d_base[None, :]
    dist = np.where(same, np.minimum(own, through), through)
    np.fill_diagonal(dist, 0.0)

    meta = {
        "generator": "earring",
        "pitch": 2 * math.pi / m,
        "circles": n,
        "cells_per_circle": m,
        "circle_of_cell": [int(v) for v in cnum],
        "arc_of_cell": [float(v) for v in arc],
    }
    return FiniteMMS(dist=dist, weight=np.asarray(weights), meta=meta)


# === necklace spaces ===

@dataclass(frozen=True)
class NecklaceParams:
    """Bead layout and resolution for a necklace space.

    ``beads`` lists (x_k, r_k) pairs with 0 < r_k <= 1 and
    r_k/4 <= x_k <= pi/2 - r_k/4; the bead intervals
    [x_k - r_k/4, x_k + r_k/4] must be pairwise disjoint.
    """

    beads: tuple
    resolution: float

    def __post_init__(self):
        beads = tuple((float(x), float(r)) for x, r in self.beads)
        if not 0 < self.resolution < HALF_PI:
            raise ValueError("resolution must lie in (0, pi/2)")
        for x, r in beads:
            if not 0 < r <= 1:
                raise ValueError(f"bead size {r} outside (0, 1]")
            if not (r / 4 <= x <= HALF_PI - r / 4):
                raise ValueError(f"bead at {x} does not fit in [0, pi/2]")
        spans = sorted((x - r / 4, x + r / 4) for x, r in beads)
        for (_, hi), (lo, _) in zip(spans, spans[1:]):
            if lo < hi:
                raise ValueError("bead intervals overlap")
        object.__setattr__(self, "beads", tuple(sorted(beads)))


def necklace(params: NecklaceParams) -> FiniteMMS:
    """Necklace space: the cos^2 segment with diamond-shaped beads.

    Each bead replaces its segment interval with the 2D diamond
    {|y| <= (r/4 - |x - x_k|)/9}.  Cells are organized per x-fiber: a fiber
    inside a bead of half-height H is split into an even number of y-cells
    of extent at most one pitch, all sharing the fiber mass cos^2(x)*pitch
    equally (the bead density is constant in y for fixed x).  The metric is
    the intrinsic length metric induced by the L-infinity norm, realized as
    shortest paths in the cell-adjacency graph: consecutive cells of one
    fiber at cost |dy|, all cell pairs of adjacent fibers at cost
    max(pitch, |dy|).
    """
    h = params.resolution
    n_fib = max(2, round(HALF_PI / h))
    w = HALF_PI / n_fib
    fx = (np.arange(n_fib) + 0.5) * w

    bead_of_fiber = np.full(n_fib, -1)
    fiber_h = np.zeros(n_fib)
    for k, (xk, rk) in enumerate(params.beads):
        inside = np.abs(fx - xk) < rk / 4
        bead_of_fiber[inside] = k
        fiber_h[inside] = DIAMOND_SLOPE * (rk / 4 - np.abs(fx[inside] - xk))

    fiber_count = np.where(fiber_h > 0,
                           2 * np.ceil(fiber_h / w - 1e-12).astype(int), 1)
    fiber_start = np.concatenate([[0], np.cumsum(fiber_count)])
    n_cells = int(fiber_start[-1])

    xs = np.empty(n_cells)
    ys = np.empty(n_cells)
    weight = np.empty(n_cells)
    for i in range(n_fib):
        k_i = fiber_count[i]
        sl = slice(fiber_start[i], fiber_start[i] + k_i)
        xs[sl] = fx[i]
        if k_i == 1:
            ys[sl] = 0.0
        else:
            ext = 2 * fiber_h[i] / k_i
            ys[sl] = -fiber_h[i] + (np.arange(k_i) + 0.5) * ext
        weight[sl] = np.cos(fx[i]) ** 2 * w / k_i

    rows, cols, vals = [], [], []
    for i in range(n_fib):
        a = slice(fiber_start[i], fiber_start[i + 1])
        k_i = fiber_count[i]
        if k_i > 1:
            idx = np.arange(fiber_start[i], fiber_start[i + 1])
            step = ys[idx[1]] - ys[idx[0]]
            rows.append(idx[:-1])
            cols.append(idx[1:])
            vals.append(np.full(k_i - 1, step))
        if i + 1 < n_fib:
            b = slice(fiber_start[i + 1], fiber_start[i + 2])
            ia = np.arange(a.start, a.stop)
            ib = np.arange(b.start, b.stop)
            pi, pj = np.meshgrid(ia, ib, indexing="ij")
            dy = np.abs(ys[pi] - ys[pj])
            rows.append(pi.ravel())
            cols.append(pj.ravel())
            vals.append(np.maximum(w, dy).ravel())
    graph = csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    )
    dist = dijkstra(graph, directed=False)
    dist = (dist + dist.T) / 2
    np.fill_diagonal(dist, 0.0)

    meta = {
        "generator": "necklace",
        "pitch": w,
        "beads": [[x, r] for x, r in params.beads],
        "width_factor": DIAMOND_SLOPE,
        "necklace": {
            "fiber_x": [float(v) for v in fx],
            "fiber_h": [float(v) for v in fiber_h],
            "fiber_count": [int(v) for v in fiber_count],
            "fiber_start": [int(v) for v in fiber_start[:-1]],
            "bead_of_fiber": [int(v) for v in bead_of_fiber],
        },
    }
    return FiniteMMS(dist=dist, weight=weight,
                     coords=np.column_stack([xs, ys]), meta=meta)


def necklace_fibers(space: FiniteMMS):
    """Per-fiber bookkeeping arrays of a necklace space.

    Returns (fiber_of_cell, fiber_x, fiber_h, fiber_count, fiber_start,
    bead_of_fiber) as numpy arrays.  Works on any space produced by
    ``necklace`` (including zero beads).
    """
    info = space.meta.get("necklace")
    if info is None:
        raise ValueError("space does not carry necklace fiber metadata")
    start = np.asarray(info["fiber_start"], dtype=int)
    count = np.asarray(info["fiber_count"], dtype=int)
    fiber_of_cell = np.repeat(np.arange(start.size), count)
    return (
        fiber_of_cell,
        np.asarray(info["fiber_x"], dtype=float),
        np.asarray(info["fiber_h"], dtype=float),
        count,
        start,
        np.asarray(info["bead_of_fiber"], dtype=int),
    )


# === Euclidean ball grids ===

def euclidean_ball_grid(k: int, r: float, resolution: float) -> FiniteMMS:
    """Grid discretization of the closed Euclidean ball of radius r in R^k."""
    if k not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2, or 3")
    if r <= 0 or resolution <= 0:
        raise ValueError("radius and resolution must be positive")
    pitch = float(resolution)
    m = int(math.floor(r / pitch + 1e-12))
    axis = pitch * np.arange(-m, m + 1)
    grids = np.meshgrid(*([axis] * k), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    keep = np.einsum("ij,ij->i", pts, pts) <= r * r + 1e-12
    pts = pts[keep]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    meta = {"generator": "ball", "pitch": pitch, "dim": k, "radius": r}
    return FiniteMMS(dist=dist, weight=np.full(len(pts), pitch**k),
                     coords=pts, meta=meta)
