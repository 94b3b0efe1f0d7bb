"""Weak-form assembly: operator, penalty, reaction, boundary, masking."""

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import (
    interval,
    make_spec,
    obstacle_fn,
    random_function,
    rectangle,
    reference_energy,
)
from dpobstacle.assembly import (
    AssembledSystem,
    apply_operator,
    assemble_system,
    boundary_term,
    clarke_directional,
    operator_energy,
    operator_jacobian,
    operator_residual,
    penalty_term,
    reaction_term,
)
from dpobstacle.catalog import boundary_potential, reaction
from dpobstacle.errors import ConfigurationError, SingularOperatorError
from dpobstacle.meshing import DiscreteFunction, build_interval_mesh


class TestOperator:
    def test_linear_ramp_pairing(self):
        # single unit element, u = x, both powers active with unit weight:
        # <A u, u> = 1/1 + 1/1 = 2
        mesh = interval(1)
        spec = make_spec(mesh, p=3.0, q=4.0, mu=1.0)
        u = mesh.nodes[:, 0]
        assert apply_operator(spec, u, u) == pytest.approx(2.0, abs=1e-14)

    def test_harmonic_ramp_annihilates_interior_hats(self):
        # u = x is discretely harmonic for the pure power-2 operator
        mesh = interval(8)
        spec = make_spec(mesh, p=2.0, q=2.0, mu=0.0)
        u = mesh.nodes[:, 0]
        for i in range(1, mesh.n_nodes - 1):
            v = np.zeros(mesh.n_nodes)
            v[i] = 1.0
            assert abs(apply_operator(spec, u, v)) <= 1e-14

    def test_residual_realizes_pairing(self, rng):
        mesh = rectangle(3, 2)
        spec = make_spec(mesh, p=2.4, q=3.2, mu=lambda x, y: x + y,
                         eps=1e-8)
        u = random_function(mesh, rng)
        r = operator_residual(spec, u)
        for _ in range(10):
            v = rng.normal(size=mesh.n_nodes)
            assert np.dot(r, v) == pytest.approx(
                apply_operator(spec, u, v), rel=1e-12, abs=1e-13)

    @pytest.mark.parametrize("build", [
        lambda: (interval(11),
                 dict(p=2.5, q=3.5, mu=lambda x: 0.5 + 0.3 * np.sin(2 * x))),
        lambda: (rectangle(3, 3),
                 dict(p=2.2, q=2.9, mu=lambda x, y: 0.4 + 0.5 * x * y)),
    ])
    def test_residual_is_energy_gradient(self, rng, build):
        mesh, kw = build()
        spec = make_spec(mesh, eps=1e-8, **kw)
        for _ in range(5):
            u = random_function(mesh, rng).values
            r = operator_residual(spec, u)
            v = rng.normal(size=mesh.n_nodes)
            t = 1e-6
            fd = (reference_energy(spec, u + t * v)
                  - reference_energy(spec, u - t * v)) / (2 * t)
            assert np.dot(r, v) == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_energy_matches_loop_reference(self, rng):
        mesh = rectangle(2, 3)
        spec = make_spec(mesh, p=2.3, q=3.1, mu=lambda x, y: x, eps=1e-6)
        u = random_function(mesh, rng).values
        assert operator_energy(spec, u) == pytest.approx(
            reference_energy(spec, u), rel=1e-13)

    def test_jacobian_symmetric(self, rng):
        mesh = rectangle(3, 2)
        spec = make_spec(mesh, p=2.4, q=3.2, mu=lambda x, y: x + y, eps=1e-8)
        u = random_function(mesh, rng)
        J = operator_jacobian(spec, u).toarray()
        assert np.max(np.abs(J - J.T)) <= 1e-12

    @pytest.mark.parametrize("build", [
        lambda: (interval(9), dict(p=2.6, q=3.4, mu=0.7)),
        lambda: (rectangle(2, 2), dict(p=2.2, q=3.0, mu=lambda x, y: y)),
    ])
    def test_jacobian_matches_fd(self, rng, build):
        mesh, kw = build()
        spec = make_spec(mesh, eps=1e-8, **kw)
        u = random_function(mesh, rng).values
        J = operator_jacobian(spec, u).toarray()
        h = 1e-6
        for j in range(mesh.n_nodes):
            up, dn = u.copy(), u.copy()
            up[j] += h
            dn[j] -= h
            col = (operator_residual(spec, up)
                   - operator_residual(spec, dn)) / (2 * h)
            assert np.allclose(J[:, j], col, atol=1e-5)

    def test_power_two_gives_exact_stiffness(self):
        # p = q = 2 with zero weight: the matrix is the classic (1/h)
        # tridiagonal [-1, 2, -1] and the match is exact in floating point
        n = 64
        mesh = interval(n)
        spec = make_spec(mesh, p=2.0, q=2.0, mu=0.0)
        u = np.linspace(-1, 1, mesh.n_nodes) ** 2
        J = operator_jacobian(spec, u).toarray()
        h = 1.0 / n
        T = (np.diag(np.full(mesh.n_nodes, 2.0 / h))
             + np.diag(np.full(mesh.n_nodes - 1, -1.0 / h), 1)
             + np.diag(np.full(mesh.n_nodes - 1, -1.0 / h), -1))
        T[0, 0] = T[-1, -1] = 1.0 / h
        assert np.max(np.abs(J - T)) == 0.0

    def test_operator_monotone(self, rng):
        mesh = interval(10)
        spec = make_spec(mesh, p=2.6, q=3.1, mu=lambda x: x, eps=1e-8)
        for _ in range(50):
            u = rng.uniform(-2, 2, mesh.n_nodes)
            v = rng.uniform(-2, 2, mesh.n_nodes)
            gap = np.dot(operator_residual(spec, u)
                         - operator_residual(spec, v), u - v)
            assert gap >= -1e-12

    def test_degenerate_gradient_needs_regularization(self):
        mesh = interval(4)
        spec = make_spec(mesh, p=1.5, q=2.5, mu=0.5, eps=1e-8)
        u = np.ones(mesh.n_nodes)  # zero gradient everywhere
        with pytest.raises(SingularOperatorError):
            apply_operator(spec, u, u, eps_grad=0.0)
        # the problem's own stored floor keeps the same call finite
        assert np.isfinite(apply_operator(spec, u, u))


class TestPenalty:
    def test_unit_excess_pairing(self):
        # u = 2 over cap 1 on the unit interval at strength 1: pairing
        # against v = 1 integrates the excess, giving 1
        mesh = interval(4)
        spec = make_spec(mesh, phi=1.0)
        u = np.full(mesh.n_nodes, 2.0)
        vec, diag = penalty_term(spec, u, rho=1.0)
        assert np.dot(vec, np.ones(mesh.n_nodes)) == pytest.approx(
            1.0, abs=1e-14)
        assert np.all(diag[vec > 0] > 0.0)

    def test_inactive_below_cap(self, rng):
        mesh = interval(6)
        spec = make_spec(mesh, phi=0.5)
        u = rng.uniform(-1.0, 0.5, mesh.n_nodes)
        vec, diag = penalty_term(spec, u, rho=1e-3)
        assert np.all(vec == 0.0) and np.all(diag == 0.0)

    def test_vanishes_exactly_at_contact(self):
        mesh = interval(5)
        spec = make_spec(mesh, phi=0.25)
        u = np.full(mesh.n_nodes, 0.25)
        vec, _ = penalty_term(spec, u, rho=1e-6)
        assert np.all(vec == 0.0)

    def test_monotone_in_state(self, rng):
        mesh = interval(7)
        spec = make_spec(mesh, phi=0.3)
        for _ in range(500):
            u = rng.uniform(-1, 1.5, mesh.n_nodes)
            v = rng.uniform(-1, 1.5, mesh.n_nodes)
            pu, _ = penalty_term(spec, u, rho=0.01)
            pv, _ = penalty_term(spec, v, rho=0.01)
            assert np.dot(pu - pv, u - v) >= 0.0

    def test_infinite_cap_is_inert(self, rng):
        mesh = interval(5)
        spec = make_spec(mesh, phi=None)
        u = rng.uniform(-5, 5, mesh.n_nodes)
        vec, diag = penalty_term(spec, u, rho=1e-9)
        assert np.all(vec == 0.0) and np.all(diag == 0.0)

    def test_positive_strength_required(self):
        mesh = interval(4)
        spec = make_spec(mesh, phi=1.0)
        with pytest.raises(ConfigurationError):
            penalty_term(spec, np.zeros(mesh.n_nodes), rho=0.0)
        with pytest.raises(ConfigurationError):
            penalty_term(spec, np.zeros(mesh.n_nodes), rho=-1.0)


class TestReaction:
    def test_constant_source(self):
        mesh = interval(4)
        spec = make_spec(mesh, react=reaction("constant", value=2.0))
        vec, jac, eta = reaction_term(spec, np.zeros(mesh.n_nodes))
        assert np.allclose(vec, -2.0 * mesh.node_volume_weights, atol=1e-15)
        assert np.all(eta == 2.0)
        assert sp.issparse(jac) and abs(jac).sum() == 0.0

    def test_symmetric_band_midpoint_vanishes(self, rng):
        mesh = interval(6)
        spec = make_spec(mesh, react=reaction("sign_band", slope=1.0,
                                              offset=1.0, rule="midpoint"))
        vec, _, eta = reaction_term(spec, rng.normal(size=mesh.n_nodes))
        assert np.all(vec == 0.0) and np.all(eta == 0.0)

    def test_rule_ordering(self, rng):
        mesh = interval(6)
        u = rng.normal(size=mesh.n_nodes)
        lo_spec = make_spec(mesh, react=reaction("interval", lo=-1.0, hi=2.0,
                                                 rule="lower"))
        hi_spec = make_spec(mesh, react=reaction("interval", lo=-1.0, hi=2.0,
                                                 rule="upper"))
        _, _, eta_lo = reaction_term(lo_spec, u)
        _, _, eta_hi = reaction_term(hi_spec, u)
        assert np.all(eta_lo <= eta_hi)

    def test_convective_jacobian_matches_fd(self, rng):
        mesh = interval(9)
        spec = make_spec(
            mesh, react=reaction("convective_linear", c0=1.0, c1=0.5, c2=0.3))
        u = rng.uniform(0.5, 1.5, mesh.n_nodes)  # keep gradients one-signed
        u = np.sort(u)
        vec, jac, _ = reaction_term(spec, u)
        J = jac.toarray()
        h = 1e-7
        for j in range(mesh.n_nodes):
            up, dn = u.copy(), u.copy()
            up[j] += h
            dn[j] -= h
            col = (reaction_term(spec, up)[0]
                   - reaction_term(spec, dn)[0]) / (2 * h)
            assert np.allclose(J[:, j], col, atol=1e-6)


class TestBoundary:
    def test_zero_potential_contributes_nothing(self):
        mesh = interval(4, gamma2=("right",))
        spec = make_spec(mesh)
        vec, diag = boundary_term(spec, np.ones(mesh.n_nodes), delta=1e-6)
        assert np.all(vec == 0.0) and np.all(diag == 0.0)

    def test_abs_flux_on_natural_node(self):
        mesh = interval(4, gamma2=("right",))
        spec = make_spec(mesh, bnd=boundary_potential("abs", alpha=0.3))
        u = np.ones(mesh.n_nodes)  # far from the kink relative to delta
        vec, _ = boundary_term(spec, u, delta=1e-6)
        (g2,) = mesh.gamma2_nodes
        assert vec[g2] == pytest.approx(0.3, abs=1e-15)
        assert np.count_nonzero(vec) == 1

    def test_all_dirichlet_mesh_short_circuits(self, rng):
        mesh = interval(6)
        loud = make_spec(mesh, bnd=boundary_potential("abs", alpha=5.0))
        quiet = make_spec(mesh)
        u = rng.normal(size=mesh.n_nodes)
        vec, diag = boundary_term(loud, u, delta=1e-6)
        assert np.all(vec == 0.0) and np.all(diag == 0.0)
        ra = assemble_system(loud, u, mode="unconstrained", delta=1e-6).residual
        rb = assemble_system(quiet, u, mode="unconstrained",
                             delta=1e-6).residual
        assert np.array_equal(ra, rb)

    def test_directional_sum(self):
        mesh = interval(2, gamma2=("right",))
        spec = make_spec(mesh, bnd=boundary_potential("abs", alpha=0.5))
        u = np.zeros(mesh.n_nodes)  # sits at the kink
        v = np.full(mesh.n_nodes, 2.0)
        # weight 1 at the endpoint, kink rate alpha |t|
        assert clarke_directional(spec, u, v) == pytest.approx(1.0, abs=1e-14)
        vneg = -v
        assert clarke_directional(spec, u, vneg) == pytest.approx(
            1.0, abs=1e-14)

    def test_directional_bilinear_for_quadratic(self, rng):
        mesh = interval(3, gamma2=("right",))
        spec = make_spec(mesh, bnd=boundary_potential("smooth_quadratic",
                                                      alpha=2.0))
        u = rng.normal(size=mesh.n_nodes)
        v = rng.normal(size=mesh.n_nodes)
        (g2,) = mesh.gamma2_nodes
        assert clarke_directional(spec, u, v) == pytest.approx(
            2.0 * u[g2] * v[g2], rel=1e-12)

    def test_directional_zero_without_natural_part(self, rng):
        mesh = interval(4)
        spec = make_spec(mesh, bnd=boundary_potential("abs"))
        assert clarke_directional(spec, rng.normal(size=mesh.n_nodes),
                                  rng.normal(size=mesh.n_nodes)) == 0.0


class TestAssembleSystem:
    def test_unknown_mode(self):
        mesh = interval(4)
        spec = make_spec(mesh)
        with pytest.raises(ConfigurationError):
            assemble_system(spec, np.zeros(mesh.n_nodes), mode="projected")

    def test_dirichlet_rows_become_identity(self, rng):
        mesh = interval(6)
        spec = make_spec(mesh, phi=0.5)
        u = rng.normal(size=mesh.n_nodes)
        out = assemble_system(spec, u, mode="penalty", rho=0.1)
        mask = out.dirichlet_mask
        assert np.array_equal(out.residual[mask], u[mask])
        J = out.jacobian.toarray()
        for i in np.flatnonzero(mask):
            row = np.zeros(mesh.n_nodes)
            row[i] = 1.0
            assert np.array_equal(J[i], row)

    def test_penalty_and_envelope_agree_at_matched_parameters(self, rng):
        # the lumped penalty IS the envelope gradient when eps = rho
        mesh = interval(8)
        spec = make_spec(mesh, phi=0.3)
        u = rng.uniform(-0.5, 1.0, mesh.n_nodes)
        a = assemble_system(spec, u, mode="penalty", rho=1e-2)
        b = assemble_system(spec, u, mode="moreau_yosida", rho=1e-2)
        assert np.array_equal(a.residual, b.residual)
        assert (a.jacobian - b.jacobian).nnz == 0

    def test_without_jacobian(self):
        mesh = interval(4)
        spec = make_spec(mesh, phi=0.5)
        out = assemble_system(spec, np.zeros(mesh.n_nodes),
                              with_jacobian=False)
        assert out.jacobian is None
        assert isinstance(out, AssembledSystem)

    def test_eta_reported(self):
        mesh = interval(4)
        spec = make_spec(mesh, react=reaction("constant", value=3.0))
        out = assemble_system(spec, np.zeros(mesh.n_nodes))
        assert np.all(out.eta == 3.0)


class TestProblemSpecValidation:
    def test_mesh_identity_enforced(self):
        mesh = interval(4)
        other = interval(4)
        from conftest import phase
        from dpobstacle.assembly import ProblemSpec

        with pytest.raises(ConfigurationError):
            ProblemSpec(
                mesh=mesh,
                phase=phase(other, 2.0, 2.0, 0.0),
                obstacle=obstacle_fn(mesh, None),
                reaction=reaction("constant", value=0.0),
                boundary=boundary_potential("zero"),
            )
        with pytest.raises(ConfigurationError):
            ProblemSpec(
                mesh=mesh,
                phase=phase(mesh, 2.0, 2.0, 0.0),
                obstacle=obstacle_fn(other, None),
                reaction=reaction("constant", value=0.0),
                boundary=boundary_potential("zero"),
            )

    def test_obstacle_sign_checked(self):
        mesh = interval(4)
        with pytest.raises(ConfigurationError):
            make_spec(mesh, phi=-0.5)

    def test_eps_grad_rules(self):
        mesh = interval(4)
        with pytest.raises(ConfigurationError):
            make_spec(mesh, eps=-1e-8)
        # sub-quadratic power without a smoothing floor is rejected
        with pytest.raises(ConfigurationError):
            make_spec(mesh, p=1.5, q=2.5, mu=0.5, eps=0.0)
        spec = make_spec(mesh, p=1.5, q=2.5, mu=0.5, eps=1e-8)
        assert spec.eps_grad == 1e-8

    def test_with_helpers(self):
        mesh = interval(4)
        spec = make_spec(mesh)
        r2 = reaction("constant", value=5.0)
        assert spec.with_reaction(r2).reaction is r2
        assert spec.with_eps_grad(1e-6).eps_grad == 1e-6
