"""Assembly of the discrete double-phase obstacle system.

The leading operator is the two-phase quasilinear diffusion

    u  |->  -div( |grad u|^(p-2) grad u + mu(x) |grad u|^(q-2) grad u ),

discretized with P1 elements: on each element the gradient is constant, so the
pairing, residual and exact Jacobian are elementwise closed forms.  Degenerate
exponents are handled by the regularized gradient magnitude
``g_e = sqrt(|grad u|^2 + eps_grad^2)``; the residual is then the exact
derivative of the regularized energy  ``sum_e |e| (g_e^p / p + mu_e g_e^q / q)``.

Lower-order terms use vertex-lumped quadrature: the obstacle penalty
``(w_i / rho) (u_i - phi_i)^+`` (derivative taken as zero at the kink), the
reaction selection evaluated at nodes with a volume-averaged nodal gradient,
and the smoothed boundary flux on the natural boundary part.  Dirichlet rows
of the assembled system are replaced by the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .catalog import BoundaryPotentialSpec, ReactionSpec
from .errors import ConfigurationError, SingularOperatorError
from .meshing import DiscreteFunction, Mesh, boundary_lumped_weights
from .musielak import PhaseConfig
from .nonsmooth import ConstraintSet

__all__ = [
    "ProblemSpec",
    "AssembledSystem",
    "operator_energy",
    "apply_operator",
    "operator_residual",
    "operator_jacobian",
    "penalty_term",
    "reaction_term",
    "boundary_term",
    "clarke_directional",
    "assemble_system",
    "constraint_set",
]


@dataclass(frozen=True)
class ProblemSpec:
    """A complete discrete problem instance.

    The obstacle is nodal with ``+inf`` marking unconstrained nodes and must
    be nonnegative where finite.  ``eps_grad`` must be positive whenever an
    exponent lies below 2, since the diffusion coefficient is then singular at
    vanishing gradients.
    """

    mesh: Mesh
    phase: PhaseConfig
    obstacle: DiscreteFunction
    reaction: ReactionSpec
    boundary: BoundaryPotentialSpec
    eps_grad: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.phase.mesh is not self.mesh:
            raise ConfigurationError("phase config belongs to a different mesh")
        if self.obstacle.mesh is not self.mesh:
            raise ConfigurationError("obstacle belongs to a different mesh")
        obs = self.obstacle.values
        if np.any(obs[np.isfinite(obs)] < 0):
            raise ConfigurationError("obstacle must be >= 0 where finite")
        if self.eps_grad < 0:
            raise ConfigurationError("eps_grad must be >= 0")
        if min(self.phase.p, self.phase.q) < 2.0 and not self.eps_grad > 0:
            raise ConfigurationError(
                "an exponent below 2 requires a positive gradient "
                "regularization eps_grad"
            )

    @property
    def gamma2_weights(self):
        if "bw" not in self._cache:
            self._cache["bw"] = boundary_lumped_weights(self.mesh)
        return self._cache["bw"]

    @property
    def has_gamma2(self):
        return bool(np.any(self.gamma2_weights > 0))

    def with_reaction(self, reaction):
        return replace(self, reaction=reaction, _cache={})

    def with_eps_grad(self, eps_grad):
        return replace(self, eps_grad=eps_grad, _cache={})


@dataclass
class AssembledSystem:
    """Masked residual/Jacobian pair; Dirichlet rows are identity rows."""

    residual: np.ndarray
    jacobian: sp.csr_matrix | None
    dirichlet_mask: np.ndarray
    eta: np.ndarray


def constraint_set(spec: ProblemSpec) -> ConstraintSet:
    return ConstraintSet.from_problem(spec.mesh, spec.obstacle.values)


def _values(u):
    return u.values if isinstance(u, DiscreteFunction) else np.asarray(u, float)


def _gradient_state(spec, u, eps_grad):
    eps = spec.eps_grad if eps_grad is None else eps_grad
    grads = spec.mesh.element_gradients(_values(u))
    g2 = np.sum(grads * grads, axis=1) + eps * eps
    ge = np.sqrt(g2)
    p, q = spec.phase.p, spec.phase.q
    if min(p, q) < 2.0 and np.any(ge == 0.0):
        raise SingularOperatorError(
            "zero regularized gradient with an exponent below 2"
        )
    return grads, ge, g2


def _coef(spec, ge):
    p, q = spec.phase.p, spec.phase.q
    with np.errstate(divide="ignore"):
        cp = ge ** (p - 2.0)
        cq = ge ** (q - 2.0)
    # 0^0 = 1 (numpy) covers p = 2 exactly; p > 2 gives 0 at ge = 0.
    return cp + spec.phase.mu * cq


def operator_energy(spec: ProblemSpec, u, eps_grad=None) -> float:
    """Regularized two-phase Dirichlet energy sum_e |e| (g^p/p + mu g^q/q)."""
    _, ge, _ = _gradient_state(spec, u, eps_grad)
    p, q = spec.phase.p, spec.phase.q
    dens = ge**p / p + spec.phase.mu * ge**q / q
    return float(np.dot(spec.mesh.element_volumes, dens))


def apply_operator(spec: ProblemSpec, u, v, eps_grad=None) -> float:
    """Energy pairing of the operator at ``u`` against ``v``."""
    grads_u, ge, _ = _gradient_state(spec, u, eps_grad)
    grads_v = spec.mesh.element_gradients(_values(v))
    coef = _coef(spec, ge)
    dots = np.sum(grads_u * grads_v, axis=1)
    return float(np.dot(spec.mesh.element_volumes, coef * dots))


def operator_residual(spec: ProblemSpec, u, eps_grad=None) -> np.ndarray:
    """Unmasked residual vector of the leading operator."""
    grads, ge, _ = _gradient_state(spec, u, eps_grad)
    coef = spec.mesh.element_volumes * _coef(spec, ge)
    # local vector |e| coef G^T grad
    local = np.einsum("ekv,ek->ev", spec.mesh.gradient_maps, grads) * coef[:, None]
    r = np.zeros(spec.mesh.n_nodes)
    np.add.at(r, spec.mesh.elements.ravel(), local.ravel())
    return r


def operator_jacobian(spec: ProblemSpec, u, eps_grad=None, frozen=False):
    """Exact (or coefficient-frozen) sparse Jacobian of the leading operator.

    ``frozen=True`` drops the rank-one derivative of the nonlinear
    coefficient, giving the fixed-point (Picard) linearization.
    """
    mesh = spec.mesh
    grads, ge, g2 = _gradient_state(spec, u, eps_grad)
    p, q = spec.phase.p, spec.phase.q
    mu = spec.phase.mu
    coef = _coef(spec, ge)
    nv = mesh.dim + 1
    GtG = np.einsum("eka,ekb->eab", mesh.gradient_maps, mesh.gradient_maps)
    blocks = (mesh.element_volumes * coef)[:, None, None] * GtG
    if not frozen:
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = ((p - 2.0) * ge ** (p - 2.0) + mu * (q - 2.0) * ge ** (q - 2.0)) / g2
        fac = np.where(g2 > 0.0, fac, 0.0)
        Gg = np.einsum("ekv,ek->ev", mesh.gradient_maps, grads)
        blocks = blocks + (mesh.element_volumes * fac)[:, None, None] * (
            Gg[:, :, None] * Gg[:, None, :]
        )
    rows = np.repeat(mesh.elements, nv, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nv)).ravel()
    J = sp.csr_matrix(
        (blocks.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    )
    return J


def penalty_term(spec: ProblemSpec, u, rho):
    """Lumped obstacle penalty vector and its diagonal derivative.

    Infinite obstacle entries deactivate the node; the derivative at the kink
    ``u = phi`` is taken as zero.
    """
    if not rho > 0:
        raise ConfigurationError(f"penalty parameter must be positive, got {rho}")
    vals = _values(u)
    phi = spec.obstacle.values
    w = spec.mesh.node_volume_weights
    finite = np.isfinite(phi)
    active = finite & (vals > phi)
    vec = np.where(active, w * np.where(finite, vals - phi, 0.0) / rho, 0.0)
    diag = np.where(active, w / rho, 0.0)
    return vec, diag


def reaction_term(spec: ProblemSpec, u):
    """Reaction residual ``-w_i eta_i``, its Jacobian, and the selection.

    The nodal gradient entering the selection is the volume-weighted average
    of the adjacent element gradients.
    """
    mesh = spec.mesh
    vals = _values(u)
    D = mesh.nodal_gradient_matrices()
    xi = np.column_stack([Dk @ vals for Dk in D])
    eta, de_ds, de_dg = spec.reaction.select_with_partials(mesh.nodes, vals, xi)
    w = mesh.node_volume_weights
    vec = -w * eta
    jac = sp.diags(-w * de_ds).tocsr()
    for k, Dk in enumerate(D):
        col = de_dg[:, k]
        if np.any(col != 0.0):
            jac = jac + sp.diags(-w * col) @ Dk
    return vec, jac.tocsr(), eta


def boundary_term(spec: ProblemSpec, u, delta):
    """Smoothed boundary flux on the natural part: vector and diagonal."""
    n = spec.mesh.n_nodes
    vec = np.zeros(n)
    diag = np.zeros(n)
    bw = spec.gamma2_weights
    idx = np.flatnonzero(bw > 0)
    if idx.size:
        s = _values(u)[idx]
        vec[idx] = bw[idx] * spec.boundary.smoothed_grad(s, delta)
        diag[idx] = bw[idx] * spec.boundary.smoothed_grad_deriv(s, delta)
    return vec, diag


def clarke_directional(spec: ProblemSpec, u, v) -> float:
    """Exact boundary term sum of weights times the generalized directional
    derivative of the potential at the trace of ``u`` in direction ``v``."""
    bw = spec.gamma2_weights
    idx = np.flatnonzero(bw > 0)
    if not idx.size:
        return 0.0
    s = _values(u)[idx]
    t = _values(v)[idx]
    return float(np.dot(bw[idx], spec.boundary.clarke_directional(s, t)))


def _mask_system(mesh, r, J, vals):
    mask = mesh.dirichlet_mask
    r = r.copy()
    r[mask] = vals[mask]
    if J is not None:
        free = sp.diags((~mask).astype(float))
        J = (free @ J + sp.diags(mask.astype(float))).tocsr()
    return r, J


def assemble_system(
    spec: ProblemSpec,
    u,
    mode="penalty",
    rho=1.0,
    delta=0.0,
    eps_grad=None,
    with_jacobian=True,
    frozen=False,
) -> AssembledSystem:
    """Full masked system for one approximation mode.

    ``penalty`` adds the lumped obstacle penalty at parameter ``rho``;
    ``moreau_yosida`` adds the envelope gradient of the constraint-set
    indicator at parameter ``rho``; ``unconstrained`` adds neither.
    """
    vals = _values(u)
    r = operator_residual(spec, vals, eps_grad)
    diag_extra = np.zeros_like(r)

    react_vec, react_jac, eta = reaction_term(spec, vals)
    r = r + react_vec
    bnd_vec, bnd_diag = boundary_term(spec, vals, delta)
    r = r + bnd_vec
    diag_extra += bnd_diag

    if mode == "penalty":
        pen_vec, pen_diag = penalty_term(spec, vals, rho)
        r = r + pen_vec
        diag_extra += pen_diag
    elif mode == "moreau_yosida":
        K = constraint_set(spec)
        r = r + K.envelope_grad(vals, rho)
        diag_extra += K.envelope_hess_diag(vals, rho)
    elif mode != "unconstrained":
        raise ConfigurationError(f"unknown approximation mode {mode!r}")

    J = None
    if with_jacobian:
        J = operator_jacobian(spec, vals, eps_grad, frozen=frozen)
        J = J + sp.diags(diag_extra)
        if not frozen:
            # the fixed-point linearization also freezes the selection
            J = J + react_jac
    r, J = _mask_system(spec.mesh, r, J, vals)
    return AssembledSystem(
        residual=r, jacobian=J, dirichlet_mask=spec.mesh.dirichlet_mask, eta=eta
    )
