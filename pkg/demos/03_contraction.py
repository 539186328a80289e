"""
Contraction inequality and the bead-chain schedule
===================================================

A point-to-set geodesic plan on the weighted segment must not compress
mass faster than the model coefficient sin^2(l)/(t sin^2(t l)) allows.
mcp_check verifies this cell by cell; a refinement study shows the
discretization defect vanishing linearly with the pitch.  On a two-bead
necklace, necklace_schedule builds the spreading plan through the bead
interiors and schedule_density_check certifies its density profile.
"""

import math

import numpy as np

from mmslab import (
    NecklaceParams,
    chebyshev_times,
    delta,
    lift_to_geodesic_plan,
    mcp_check,
    necklace,
    necklace_schedule,
    scalar_bound,
    schedule_density_check,
    segment_space,
    solve_w2,
    uniform_on,
)
from mmslab.generators import necklace_fibers

# === refinement study on the segment ===
#
# transport a unit mass at 0 onto the window [pi/4, pi/2] and check the
# density bound at three pitches; the worst raw slack is negative by a
# discretization error that halves with the pitch

times = chebyshev_times(129)
for h in (math.pi / 200, math.pi / 400, math.pi / 800):
    sp = segment_space(h)
    targets = [i for i in range(sp.n) if sp.coords[i, 0] >= math.pi / 4]
    res = solve_w2(sp, delta(sp, 0), uniform_on(sp, targets))
    plan = lift_to_geodesic_plan(sp, res.coupling)
    rep = mcp_check(sp, plan, t_samples=times)
    print(f"pitch pi/{round(math.pi / h):4d}: ok={rep.ok} "
          f"allowance={rep.allowance:.5f} raw slack={rep.worst_slack:+.2e} "
          f"at t={rep.worst_t:.3f}")

# === the spreading schedule on a two-bead necklace ===

sp = necklace(NecklaceParams(beads=((0.4, 0.3), (1.1, 0.3)),
                             resolution=math.pi / 640))
_, fx, _, fcount, fstart, _ = necklace_fibers(sp)

# source cell mid-fiber inside the first bead, target fiber in the second
src_f = int(np.argmin(np.abs(fx - 0.38)))
source = int(fstart[src_f] + fcount[src_f] // 2)
target_f = int(np.argmin(np.abs(fx - 1.06)))

sched = necklace_schedule(sp, source, target_f, 2)
print(f"\nschedule: {len(sched.plan.atoms)} atoms, length {sched.length:.4f}")
print(f"  spread fiber at x={sched.x_spread:.4f} "
      f"({sched.kappa_spread} of {sched.fiber_count_spread} cells)")
print(f"  landmark times: spread {sched.t_spread:.4f}, "
      f"flat {sched.t_flat_start:.4f} to {sched.t_flat_end:.4f}")

rep = schedule_density_check(sp, sched)
print(f"  density bound ok={rep.ok} heights ok={rep.heights_ok} "
      f"({len(rep.rows)} times)")
print(f"  marginal defect {rep.marginal_defect:.1e}, "
      f"worst slack {rep.worst_slack:+.2e} at t={rep.worst_t:.3f}")

# === the scalar coefficient estimate behind the height bound ===

srep = scalar_bound(samples=500)
print(f"\nscalar bound on (0, 0.2] x (0, pi/2 + 0.25]: ok={srep.ok}, "
      f"min margin {srep.min_margin:+.4f} "
      f"at (t, d) = ({srep.argmin_t:.3f}, {srep.argmin_d:.3f})")
