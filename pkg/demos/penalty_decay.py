"""Penalty continuation on a one-dimensional contact problem.

The membrane -u'' = 8 on (0, 1), clamped at both ends, is pressed against
the ceiling u <= 0.5.  The constraint is enforced by a penalty term whose
strength grows as the approximation parameter rho shrinks; each stage is
warm-started from the previous one.  The table below shows the constraint
violation decaying proportionally to rho (empirical slope ~1 in log-log),
while the iteration counts stay small thanks to warm starts.
"""

import numpy as np

from dpobstacle.assembly import ProblemSpec, constraint_set
from dpobstacle.catalog import boundary_potential, reaction
from dpobstacle.meshing import BoundaryPartition, DiscreteFunction, build_interval_mesh
from dpobstacle.musielak import PhaseConfig
from dpobstacle.solver import SolverConfig, continuation

mesh = build_interval_mesh(0.0, 1.0, 64, partition=BoundaryPartition.all_dirichlet())
spec = ProblemSpec(
    mesh=mesh,
    phase=PhaseConfig.for_mesh(mesh, p=2.0, q=2.0, mu=0.0),
    obstacle=DiscreteFunction.constant(mesh, 0.5),
    reaction=reaction("constant", value=8.0),
    boundary=boundary_potential("zero"),
    eps_grad=0.0,
)

schedule = [10.0 ** -k for k in range(9)]
reports = continuation(spec, schedule, SolverConfig())

print("rho        max(u - phi)+   newton its   residual")
for rep in reports:
    viol = float(np.max(np.maximum(rep.solution.values - 0.5, 0.0)))
    print(f"{rep.rho:9.1e}  {viol:13.3e}  {rep.iterations:10d}   "
          f"{rep.residual_norm:.2e}")

# Without the obstacle the membrane would peak at 8/8 = 1; the ceiling at
# 0.5 flattens the middle into a contact zone.
final = reports[-1].solution.values
contact = np.flatnonzero(final >= 0.5 - 1e-6)
x = mesh.nodes[:, 0]
print()
print(f"unconstrained peak would be 1.0; computed max = {final.max():.6f}")
print(f"contact zone: x in [{x[contact[0]]:.4f}, {x[contact[-1]]:.4f}] "
      f"({contact.size} nodes)")

# Feasibility certificate: project onto the admissible set and measure how
# far the iterate was from it.
K = constraint_set(spec)
dist = np.max(np.abs(K.project_values(final) - final))
print(f"distance to the admissible set: {dist:.3e} (of order rho = {schedule[-1]:.0e})")
