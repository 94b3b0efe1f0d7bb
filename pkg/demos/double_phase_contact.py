"""Contact with a spatially switching diffusion law.

The leading operator blends a p-power and a q-power of the gradient with a
nonnegative weight mu(x): where mu is large the stiffer q-growth dominates,
where it vanishes the operator is purely p-growth.  Here p=2.5, q=3 and
mu(x)=x ramps from 0 to 1 across the interval, so the left half of the
membrane is softer than the right.  Pressed against the ceiling phi=0.05 by
a uniform load, the solution develops a visibly asymmetric contact zone.
"""

import numpy as np

from dpobstacle.assembly import ProblemSpec
from dpobstacle.catalog import boundary_potential, reaction
from dpobstacle.meshing import BoundaryPartition, DiscreteFunction, build_interval_mesh
from dpobstacle.musielak import PhaseConfig
from dpobstacle.solver import SolverConfig, continuation

n = 128
mesh = build_interval_mesh(0.0, 1.0, n, partition=BoundaryPartition.all_dirichlet())


def run(mu):
    spec = ProblemSpec(
        mesh=mesh,
        phase=PhaseConfig.for_mesh(mesh, p=2.5, q=3.0, mu=mu),
        obstacle=DiscreteFunction.constant(mesh, 0.05),
        reaction=reaction("constant", value=1.0),
        boundary=boundary_potential("zero"),
        eps_grad=1e-8,
    )
    reports = continuation(spec, [10.0 ** -k for k in range(9)], SolverConfig())
    assert all(r.converged for r in reports)
    return reports[-1].solution.values


x = mesh.nodes[:, 0]
for label, mu in [("uniform soft (mu=0)", 0.0),
                  ("switching (mu=x)", lambda s: s),
                  ("uniform stiff (mu=1)", 1.0)]:
    u = run(mu)
    contact = np.flatnonzero(u >= 0.05 - 1e-6)
    lo, hi = (x[contact[0]], x[contact[-1]]) if contact.size else (np.nan, np.nan)
    print(f"{label:22s}: max u = {u.max():.6f},  contact "
          f"[{lo:.4f}, {hi:.4f}]  ({contact.size} nodes)")

print()
print("With mu(x)=x the stiffer right half lifts off the ceiling earlier, so")
print("the contact zone is shifted left relative to the symmetric cases.")
