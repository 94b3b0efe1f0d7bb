"""Obstacle constraint set, projection, and Moreau-Yosida envelope.

The admissible set collects nodal vectors that stay below the obstacle and
vanish on the Dirichlet boundary part.  Because both constraints act nodewise
and the discrete inner product is the diagonal lumped-weight product, the
metric projection is a nodewise clip followed by zeroing the Dirichlet nodes,
and the Moreau-Yosida envelope of the set indicator has the closed form

    env_eps(u) = ||u - proj(u)||_w^2 / (2 eps),
    grad env_eps(u)_i = (w_i / eps) (u_i - proj(u)_i),

with ``||d||_w^2 = sum_i w_i d_i^2``.  Using the lumped-weight metric in place
of the full energy-space norm is a deliberate simplification; the envelope it
induces has the same monotone/limit structure but can select a different
approximating path than the energy-space envelope would.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .meshing import DiscreteFunction, Mesh

__all__ = [
    "ConstraintSet",
    "project",
    "moreau_yosida_value",
    "moreau_yosida_grad",
    "plus_part",
]


@dataclass(frozen=True)
class ConstraintSet:
    """Nodal vectors below the obstacle and zero on the Dirichlet nodes.

    ``obstacle`` entries may be ``+inf`` (unconstrained node).  The obstacle
    must be >= 0 where finite so that the zero vector belongs to the set.
    """

    mesh: Mesh
    obstacle: np.ndarray
    dirichlet_mask: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.obstacle, dtype=float)
        mask = np.asarray(self.dirichlet_mask, dtype=bool)
        object.__setattr__(self, "obstacle", obs)
        object.__setattr__(self, "dirichlet_mask", mask)
        if obs.shape != (self.mesh.n_nodes,) or mask.shape != (self.mesh.n_nodes,):
            raise ConfigurationError("obstacle/mask length must match the mesh")
        if np.any(np.isnan(obs)) or np.any(np.isneginf(obs)):
            raise ConfigurationError("obstacle values may not be NaN or -inf")
        if np.any(obs[np.isfinite(obs)] < 0):
            raise ConfigurationError(
                "obstacle must be >= 0 where finite (zero must be admissible)"
            )

    @classmethod
    def from_problem(cls, mesh, obstacle_values):
        return cls(mesh=mesh, obstacle=obstacle_values,
                   dirichlet_mask=mesh.dirichlet_mask)

    def contains(self, values, tol=0.0):
        values = np.asarray(values, dtype=float)
        below = np.all(values <= self.obstacle + tol)
        pinned = np.all(np.abs(values[self.dirichlet_mask]) <= tol)
        return bool(below and pinned)

    def project_values(self, values):
        out = np.minimum(np.asarray(values, dtype=float), self.obstacle)
        out[self.dirichlet_mask] = 0.0
        return out

    def envelope_value(self, values, eps):
        if eps <= 0:
            raise ConfigurationError("envelope parameter eps must be positive")
        d = np.asarray(values, dtype=float) - self.project_values(values)
        w = self.mesh.node_volume_weights
        return float(np.dot(w, d * d) / (2.0 * eps))

    def envelope_grad(self, values, eps):
        if eps <= 0:
            raise ConfigurationError("envelope parameter eps must be positive")
        d = np.asarray(values, dtype=float) - self.project_values(values)
        return self.mesh.node_volume_weights * d / eps

    def envelope_hess_diag(self, values, eps):
        """Generalized derivative of the envelope gradient (diagonal).

        At the kink ``u = obstacle`` the zero branch is chosen, matching the
        penalty assembly convention.
        """
        if eps <= 0:
            raise ConfigurationError("envelope parameter eps must be positive")
        values = np.asarray(values, dtype=float)
        active = (values > self.obstacle) | self.dirichlet_mask
        return np.where(active, self.mesh.node_volume_weights / eps, 0.0)


def project(u: DiscreteFunction, K: ConstraintSet) -> DiscreteFunction:
    """Metric projection onto the constraint set (clip, then pin Dirichlet)."""
    if u.mesh is not K.mesh:
        raise ConfigurationError("function and constraint set live on different meshes")
    return DiscreteFunction(u.mesh, K.project_values(u.values))


def moreau_yosida_value(u: DiscreteFunction, K: ConstraintSet, eps: float) -> float:
    """Envelope of the set indicator at ``u``: squared distance over ``2 eps``."""
    if u.mesh is not K.mesh:
        raise ConfigurationError("function and constraint set live on different meshes")
    return K.envelope_value(u.values, eps)


def moreau_yosida_grad(u: DiscreteFunction, K: ConstraintSet, eps: float) -> DiscreteFunction:
    """Gradient of the envelope, a monotone single-valued map vanishing on K."""
    if u.mesh is not K.mesh:
        raise ConfigurationError("function and constraint set live on different meshes")
    return DiscreteFunction(u.mesh, K.envelope_grad(u.values, eps))


def plus_part(u: DiscreteFunction, phi) -> DiscreteFunction:
    """Nodal positive part (u - phi)^+; infinite obstacle entries give zero."""
    phi_vals = phi.values if isinstance(phi, DiscreteFunction) else np.asarray(phi, float)
    excess = u.values - phi_vals
    out = np.where(np.isposinf(phi_vals), 0.0, np.maximum(excess, 0.0))
    return DiscreteFunction(u.mesh, out)
