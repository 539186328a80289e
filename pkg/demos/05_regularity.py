"""
Gromov-Hausdorff distance and pointwise regularity
===================================================

gh_exact computes the exact GH distance of two small spaces by branch
and bound over correspondences.  epsilon_regular_scan uses it to ask
whether small balls around a point look like Euclidean balls: interior
segment points do, a necklace diamond vertex does not (its small balls
are three-legged), and regular_set_mass aggregates the verdicts.
"""

import math

import numpy as np

from mmslab import (
    FiniteMMS,
    NecklaceParams,
    epsilon_regular_scan,
    gh_exact,
    gh_lower_bound,
    necklace,
    regular_set_measure,
    segment_space,
)
from mmslab.generators import necklace_fibers

# === exact GH on toy pairs ===

two = lambda d: FiniteMMS(dist=np.array([[0.0, d], [d, 0.0]]),
                          weight=np.ones(2))
value, witness = gh_exact(two(1.0), two(1.6))
print(f"GH(two-point 1.0, two-point 1.6) = {value:.12f} (half of 0.6)")
print(f"  witness correspondence: {witness}")
print(f"  lower bound from invariants: {gh_lower_bound(two(1.0), two(1.6)):.3f}")

# === interior segment point: regular at every small radius ===

seg = segment_space(math.pi / 3200)
x = int(np.argmin(np.abs(seg.coords[:, 0] - math.pi / 4)))
rep = epsilon_regular_scan(seg, x, eps=0.1, delta=0.4, k_set=(1,))
print(f"\nsegment midpoint, eps=0.1: verdict {rep.verdict(1)!r}")
for row in rep.rows:
    print(f"  r={row.r:.4f}: estimate {row.estimate:.2e} "
          f"<= eps*r - err = {0.1 * row.r - row.err_verdict:.2e} "
          f"-> {row.verdict}")

# === diamond vertex: balls are tripods, never intervals ===

sp = necklace(NecklaceParams(beads=((0.7, 0.3),),
                             resolution=math.pi / 5120))
_, fx, _, _, fstart, bead = necklace_fibers(sp)
tip = 0.7 - 0.3 / 4.0
spine = np.flatnonzero((bead < 0) & (fx < tip))
vertex = int(fstart[spine[np.argmax(fx[spine])]])
rep = epsilon_regular_scan(sp, vertex, eps=0.02, delta=0.06, k_set=(1,),
                           subsample=10)
print(f"\nnecklace vertex, eps=0.02: verdict {rep.verdict(1)!r}")
for row in rep.rows:
    margin = row.estimate - 0.02 * row.r - row.err_verdict
    print(f"  r={row.r:.4f}: estimate {row.estimate:.2e}, "
          f"out-margin {margin:+.2e} -> {row.verdict}")

# === aggregate: how much of the segment is regular ===

seg = segment_space(math.pi / 3200)
rep = regular_set_measure(seg, eps=0.1, delta=0.32, k_set=(1,),
                          budget=24, r_samples=8)
split = rep.overall
print(f"\nregular mass of the segment at eps=0.1, {len(rep.scanned)} cells "
      f"scanned: in {split.in_mass:.4f}, out {split.out_mass:.4f}, "
      f"undecided {split.inconclusive_mass:.4f} "
      f"(scanned mass {rep.scanned_mass:.4f})")
