"""Finite metric measure spaces and discrete constant-speed geodesics.

A space is a finite set of cells with a symmetric distance matrix and a
positive weight per cell.  Geodesics are node chains with increasing time
stamps in [0, 1]; they approximate continuum geodesics on grid-like spaces
and satisfy a constant-speed defect bound relative to the grid pitch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

TRIANGLE_TOL = 1e-9

# Validator switches to sampled triples above this size to stay O(budget).
FULL_TRIANGLE_LIMIT = 300


def _as_float_array(a, name, ndim):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class FiniteMMS:
    """A finite metric measure space.

    Attributes
    ----------
    dist : (n, n) ndarray
        Symmetric distances with zero diagonal.
    weight : (n,) ndarray
        Strictly positive cell masses.
    coords : (n, k) ndarray or None
        Optional ambient coordinates, used by generators and serialization.
    labels : tuple of str or None
        Optional per-cell labels.
    meta : dict
        Provenance tag: generator name, parameters, grid pitch.
    """

    dist: np.ndarray
    weight: np.ndarray
    coords: np.ndarray | None = None
    labels: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dist = _as_float_array(self.dist, "dist", 2)
        weight = _as_float_array(self.weight, "weight", 1)
        if dist.shape[0] != dist.shape[1]:
            raise ValueError("dist must be square")
        if weight.shape[0] != dist.shape[0]:
            raise ValueError("weight length must match dist")
        if np.any(weight <= 0):
            raise ValueError("weights must be strictly positive")
        coords = self.coords
        if coords is not None:
            coords = _as_float_array(coords, "coords", 2)
            if coords.shape[0] != dist.shape[0]:
                raise ValueError("coords length must match dist")
            coords.setflags(write=False)
        dist.setflags(write=False)
        weight.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weight.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def pitch(self) -> float:
        """Grid pitch recorded by the generator, or the largest
        nearest-neighbour distance as a fallback."""
        p = self.meta.get("pitch")
        if p is not None:
            return float(p)
        if self.n < 2:
            return 0.0
        d = np.where(np.eye(self.n, dtype=bool), np.inf, self.dist)
        return float(d.min(axis=1).max())


@dataclass(frozen=True)
class ValidationReport:
    n: int
    symmetry_defect: float
    diagonal_defect: float
    negative_weights: int
    triangle_violations: tuple
    worst_triangle_defect: float
    triples_checked: int
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return (
            self.symmetry_defect <= TRIANGLE_TOL
            and self.diagonal_defect <= TRIANGLE_TOL
            and self.negative_weights == 0
            and self.worst_triangle_defect <= TRIANGLE_TOL
        )


def validate_space(space: FiniteMMS, tol: float = TRIANGLE_TOL, seed: int = 0,
                   max_triples: int = 20_000_000) -> ValidationReport:
    """Check metric axioms and report defects; never raises on violations.

    The triangle inequality is checked on all triples for small spaces and
    on a seeded random sample above ``FULL_TRIANGLE_LIMIT`` points.  The
    defect of a triple (i, j, k) is d(i,j) - d(i,k) - d(k,j).
    """
    d = space.dist
    n = space.n
    sym = float(np.abs(d - d.T).max()) if n else 0.0
    diag = float(np.abs(np.diag(d)).max()) if n else 0.0
    neg = int(np.sum(space.weight <= 0))

    worst = 0.0
    violations = []
    checked = 0
    exhaustive = n <= FULL_TRIANGLE_LIMIT
    if n >= 3:
        if exhaustive:
            # defect[i, j] = d(i,j) - min_k (d(i,k) + d(k,j)), k loop chunked
            best = np.full((n, n), np.inf)
            for k in range(n):
                np.minimum(best, d[:, k][:, None] + d[k, :][None, :], out=best)
                checked += n * n
            defect = d - best
            worst = float(defect.max())
            if worst > tol:
                bad = np.argwhere(defect > tol)
                for i, j in bad[:32]:
                    k = int(np.argmin(d[i, :] + d[:, j]))
                    violations.append((int(i), int(j), k, float(defect[i, j])))
        else:
            rng = np.random.default_rng(seed)
            m = min(max_triples, 4 * n * n)
            idx = rng.integers(0, n, size=(m, 3))
            defect = d[idx[:, 0], idx[:, 1]] - d[idx[:, 0], idx[:, 2]] - d[idx[:, 2], idx[:, 1]]
            checked = m
            worst = float(defect.max())
            if worst > tol:
                bad = np.argwhere(defect > tol).ravel()
                for b in bad[:32]:
                    i, j, k = (int(v) for v in idx[b])
                    violations.append((i, j, k, float(defect[b])))
    return ValidationReport(
        n=n,
        symmetry_defect=sym,
        diagonal_defect=diag,
        negative_weights=neg,
        triangle_violations=tuple(violations),
        worst_triangle_defect=max(worst, 0.0),
        triples_checked=checked,
        exhaustive=exhaustive,
    )


def scale(space: FiniteMMS, factor: float) -> FiniteMMS:
    """Rescale the metric: distances are divided by ``factor``; weights
    are untouched.  Blowing up (factor > 1) zooms in."""
    if not factor > 0:
        raise ValueError("scale factor must be positive")
    meta = dict(space.meta)
    meta["scaled_by"] = float(meta.get("scaled_by", 1.0) * factor)
    if "pitch" in meta:
        meta["pitch"] = float(meta["pitch"]) / factor
    return replace(space, dist=space.dist / factor, meta=meta)


def ball_indices(space: FiniteMMS, center: int, radius: float,
                 closed: bool = True) -> np.ndarray:
    row = space.dist[center]
    mask = (row <= radius) if closed else (row < radius)
    return np.flatnonzero(mask)


def ball(space: FiniteMMS, center: int, radius: float, closed: bool = True) -> FiniteMMS:
    """Restrict the space to the metric ball around ``center``.

    The returned space keeps the original indices in ``meta['subset']``.
    Raises on an empty ball (an open ball of radius 0, say).
    """
    idx = ball_indices(space, center, radius, closed=closed)
    if idx.size == 0:
        raise ValueError("empty ball")
    meta = dict(space.meta)
    meta["subset"] = [int(i) for i in idx]
    meta["ball"] = {"center": int(center), "radius": float(radius), "closed": bool(closed)}
    return FiniteMMS(
        dist=space.dist[np.ix_(idx, idx)].copy(),
        weight=space.weight[idx].copy(),
        coords=None if space.coords is None else space.coords[idx].copy(),
        labels=None if space.labels is None else tuple(space.labels[i] for i in idx),
        meta=meta,
    )


@dataclass(frozen=True)
class DiscreteGeodesic:
    """A constant-speed node chain.

    ``times`` are strictly increasing with times[0] = 0 and times[-1] = 1;
    ``length`` is the distance between the endpoint cells.  Evaluation uses
    the nearest-time rule with ties resolved toward the smaller time.
    """

    nodes: tuple
    times: tuple
    length: float

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        times = tuple(float(t) for t in self.times)
        if len(nodes) != len(times):
            raise ValueError("nodes and times must have equal length")
        if len(nodes) < 2:
            raise ValueError("a geodesic needs at least two nodes")
        if abs(times[0]) > 1e-12 or abs(times[-1] - 1.0) > 1e-12:
            raise ValueError("times must start at 0 and end at 1")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if self.length < 0:
            raise ValueError("length must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "times", (0.0,) + times[1:-1] + (1.0,))

    @property
    def start(self) -> int:
        return self.nodes[0]

    @property
    def end(self) -> int:
        return self.nodes[-1]


def evaluate(g: DiscreteGeodesic, t: float) -> int:
    """Node whose time stamp is nearest to t; ties go to the smaller time."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    times = np.asarray(g.times)
    return int(g.nodes[int(np.argmin(np.abs(times - t)))])


def restrict(g: DiscreteGeodesic, s: float, t: float) -> DiscreteGeodesic:
    """Reparametrized window [s, t] of ``g``.

    Endpoints are the nodes nearest to s and t (nearest-time rule); the
    restricted length is (t - s) * length, matching the constant-speed
    normalization.  Degenerate windows return a trivial two-node chain.
    """
    if not (0.0 <= s < t <= 1.0):
        raise ValueError("need 0 <= s < t <= 1")
    times = np.asarray(g.times)
    a = int(np.argmin(np.abs(times - s)))
    b = int(np.argmin(np.abs(times - t)))
    if a == b:
        v = g.nodes[a]
        return DiscreteGeodesic(nodes=(v, v), times=(0.0, 1.0), length=0.0)
    span = t - s
    inner_nodes = []
    inner_times = []
    for k in range(a + 1, b):
        u = (times[k] - s) / span
        if 0.0 < u < 1.0:
            inner_nodes.append(g.nodes[k])
            inner_times.append(float(u))
    return DiscreteGeodesic(
        nodes=(g.nodes[a], *inner_nodes, g.nodes[b]),
        times=(0.0, *inner_times, 1.0),
        length=span * g.length,
    )


def constant_speed_defect(space: FiniteMMS, g: DiscreteGeodesic) -> float:
    """max over node pairs of | d(a, b) - (t_b - t_a) * length |."""
    idx = np.asarray(g.nodes)
    tt = np.asarray(g.times)
    d = space.dist[np.ix_(idx, idx)]
    target = np.abs(tt[:, None] - tt[None, :]) * g.length
    return float(np.abs(d - target).max())


def neighbor_graph(space: FiniteMMS, edge_factor: float = 1.5):
    """Sparse graph of all pairs within ``edge_factor`` grid pitches."""
    pitch = space.pitch()
    if pitch <= 0:
        raise ValueError("space has no usable pitch")
    mask = (space.dist > 0) & (space.dist <= edge_factor * pitch)
    rows, cols = np.nonzero(mask)
    return csr_matrix((space.dist[rows, cols], (rows, cols)), shape=space.dist.shape)


def geodesics_between(space: FiniteMMS, a: int, b: int, budget: int = 1,
                      edge_factor: float = 1.5,
                      geodesic_tol: float | None = None) -> list:
    """Shortest node chains from a to b through the neighbor graph.

    Returns up to ``budget`` distinct shortest chains as DiscreteGeodesics
    with time stamps proportional to accumulated graph length.  Every chain
    is checked against the constant-speed invariant (default tolerance:
    twice the grid pitch) and against ``dist[a, b]``; a mismatch means the
    space's metric is not the path metric of its own neighbor graph.
    """
    if a == b:
        return [DiscreteGeodesic(nodes=(a, a), times=(0.0, 1.0), length=0.0)]
    if geodesic_tol is None:
        geodesic_tol = 2.0 * space.pitch()
    graph = neighbor_graph(space, edge_factor=edge_factor)
    da = dijkstra(graph, directed=False, indices=a)
    db = dijkstra(graph, directed=False, indices=b)
    total = da[b]
    if not np.isfinite(total):
        raise ValueError("endpoints are not connected in the neighbor graph")
    if abs(total - space.dist[a, b]) > geodesic_tol:
        raise ValueError(
            "neighbor-graph shortest path deviates from dist "
            f"({total:.6g} vs {space.dist[a, b]:.6g})"
        )
    slack = 1e-9 * max(total, 1.0)
    # DAG of tight edges: u -> v on a shortest path iff da[u] + w + db[v] == total
    indptr, indices, data = graph.indptr, graph.indices, graph.data
    chains = []

    def extend(u, prefix):
        if len(chains) >= budget:
            return
        if u == b:
            chains.append(prefix)
            return
        nxt = indices[indptr[u]:indptr[u + 1]]
        wts = data[indptr[u]:indptr[u + 1]]
        tight = da[u] + wts + db[nxt] <= total + slack
        order = np.argsort(nxt[tight], kind="stable")
        for v in nxt[tight][order]:
            if da[v] > da[u]:  # keeps the walk monotone, no cycles at ties
                extend(int(v), prefix + [int(v)])
                if len(chains) >= budget:
                    return

    extend(a, [a])
    out = []
    length = float(space.dist[a, b])
    for chain in chains:
        tt = da[np.asarray(chain)] / total
        g = DiscreteGeodesic(nodes=tuple(chain), times=tuple(tt), length=length)
        defect = constant_speed_defect(space, g)
        if defect > geodesic_tol:
            raise ValueError(f"constant-speed defect {defect:.3g} exceeds tolerance")
        out.append(g)
    return out


# === serialization ===

def save_space(space: FiniteMMS, path: str, dist_mode: str = "explicit") -> None:
    """Write a space as JSON.

    ``dist_mode`` is one of "explicit" (full matrix), "ambient-L2",
    "ambient-Linf" (recomputed from coords on load), or "graph" (intrinsic
    metric of the L-infinity neighbor graph; needs meta pitch/edge_factor).
    """
    points = []
    for i in range(space.n):
        rec = {"id": i}
        if space.coords is not None:
            rec["coords"] = [float(c) for c in space.coords[i]]
        if space.labels is not None:
            rec["label"] = str(space.labels[i])
        points.append(rec)
    if dist_mode == "explicit":
        dist = [[float(v) for v in row] for row in space.dist]
    elif dist_mode in ("ambient-L2", "ambient-Linf", "graph"):
        if space.coords is None:
            raise ValueError(f"dist_mode {dist_mode!r} needs coordinates")
        dist = {"mode": dist_mode}
    else:
        raise ValueError(f"unknown dist_mode {dist_mode!r}")
    doc = {
        "points": points,
        "dist": dist,
        "weights": [float(w) for w in space.weight],
        "meta": _jsonable(space.meta),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_space(path: str) -> FiniteMMS:
    with open(path) as fh:
        doc = json.load(fh)
    points = sorted(doc["points"], key=lambda p: p["id"])
    n = len(points)
    coords = None
    if points and "coords" in points[0]:
        coords = np.array([p["coords"] for p in points], dtype=float)
    labels = None
    if points and "label" in points[0]:
        labels = tuple(p["label"] for p in points)
    weights = np.asarray(doc["weights"], dtype=float)
    meta = doc.get("meta", {})
    spec = doc["dist"]
    if isinstance(spec, list):
        dist = np.asarray(spec, dtype=float)
    else:
        mode = spec["mode"]
        if coords is None:
            raise ValueError(f"dist mode {mode!r} needs point coordinates")
        if mode == "ambient-L2":
            diff = coords[:, None, :] - coords[None, :, :]
            dist = np.sqrt((diff ** 2).sum(axis=-1))
        elif mode == "ambient-Linf":
            diff = np.abs(coords[:, None, :] - coords[None, :, :])
            dist = diff.max(axis=-1)
        elif mode == "graph":
            pitch = float(meta["pitch"])
            factor = float(meta.get("edge_factor", 1.5))
            diff = np.abs(coords[:, None, :] - coords[None, :, :])
            linf = diff.max(axis=-1)
            mask = (linf > 0) & (linf <= factor * pitch)
            rows, cols = np.nonzero(mask)
            graph = csr_matrix((linf[rows, cols], (rows, cols)), shape=(n, n))
            dist = dijkstra(graph, directed=False)
        else:
            raise ValueError(f"unknown dist mode {mode!r}")
    return FiniteMMS(dist=dist, weight=weights, coords=coords, labels=labels, meta=meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj
