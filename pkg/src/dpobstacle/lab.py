"""Solution-set diagnostics along a vanishing approximation schedule.

The approximate problems have (possibly non-singleton) solution sets; this
module samples them by seeded multi-start solves crossed with selection rules,
follows warm-started chains along the decreasing parameter schedule, and
reports the numerical signatures of set convergence:

* obstacle violations per stage (sup and lumped-L1),
* distances between consecutive chain iterates, and from the next iterate to
  the current sample, in the discrete energy-space norm,
* limit candidates (chains whose step distances contract by a fixed factor
  over a trailing window), certified by a variational-inequality residual
  against a documented finite probe set,
* nearest-point traces from a limit candidate back through the samples.

A finite multi-start sample is a surrogate for the full solution set and the
finite probe set makes the certificate necessary rather than sufficient; all
thresholds live in the configuration and are echoed in the reports.  Seeds
are fixed per experiment and recorded, so repeated runs are bit-identical.

For the linear-diffusion convex case the module also carries an independent
quadratic-programming oracle (active-set enumeration and projected gradient)
and a checker for the growth/smallness assumptions, including discrete
estimates of the embedding constants.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .assembly import ProblemSpec, constraint_set, operator_jacobian
from .catalog import ReactionSpec
from .errors import ConfigurationError, EmptySampleError, OracleFailure
from .meshing import DiscreteFunction, boundary_lumped_weights
from .musielak import luxemburg_norm
from .solver import SolverConfig, SolveReport, continuation, solve_penalized, vi_residual

__all__ = [
    "SampleMember",
    "SolutionSample",
    "LimitCandidate",
    "KuratowskiDiagnostics",
    "HypothesisReport",
    "QPSolution",
    "sample_solution_set",
    "kuratowski_study",
    "nearest_point_trace",
    "qp_oracle",
    "validate_hypotheses",
]


# --- samples ----------------------------------------------------------------


@dataclass(frozen=True)
class SampleMember:
    solution: DiscreteFunction
    eta: np.ndarray
    rule: str
    start: int
    report: SolveReport


@dataclass
class SolutionSample:
    """Deduplicated converged solutions of one approximate problem."""

    rho: float
    members: list
    dedup_tol: float

    def __post_init__(self):
        if not self.members:
            raise EmptySampleError(
                f"no converged solutions sampled at rho={self.rho}"
            )
        for m in self.members:
            if not m.report.converged:
                raise ConfigurationError("sample members must all be converged")


def _lumped_distance(mesh, a, b):
    d = a - b
    return float(np.sqrt(np.dot(mesh.node_volume_weights, d * d)))


def _energy_distance(spec, a, b):
    diff = DiscreteFunction(spec.mesh, a - b)
    return luxemburg_norm(diff, spec.phase, of_gradient=False) + luxemburg_norm(
        diff, spec.phase, of_gradient=True
    )


def _rule_variants(spec, selection_rules):
    if not selection_rules:
        return [(spec.reaction.rule, spec)]
    variants = []
    for rule in selection_rules:
        if isinstance(rule, tuple):
            name, blend = rule
            rspec = replace(spec.reaction, rule=name, blend=float(blend))
            label = f"{name}({blend})"
        else:
            rspec = replace(spec.reaction, rule=rule,
                            blend=spec.reaction.blend if rule == "blend" else None)
            label = rule
        variants.append((label, spec.with_reaction(rspec)))
    return variants


def _random_starts(spec, n_starts, rng):
    phi = spec.obstacle.values
    finite = np.isfinite(phi)
    bound = (float(np.max(np.abs(phi[finite]))) if np.any(finite) else 1.0) + 1.0
    starts = rng.uniform(-bound, bound, size=(n_starts, spec.mesh.n_nodes))
    starts[:, spec.mesh.dirichlet_mask] = 0.0
    return starts


def _run_solves(tasks, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: t(), tasks))
    return [t() for t in tasks]


def _dedup(mesh, items, tol):
    kept = []
    for item in items:
        vals = item.solution.values
        if all(_lumped_distance(mesh, vals, k.solution.values) > tol for k in kept):
            kept.append(item)
    return kept


def sample_solution_set(
    spec: ProblemSpec,
    cfg: SolverConfig,
    n_starts: int = 5,
    selection_rules=None,
    seed: int = 0,
    dedup_tol: float = 1e-6,
    threads: int = 1,
) -> SolutionSample:
    """Multi-start sample of one approximate solution set.

    Initial states are drawn uniformly from the box bounded by the largest
    finite obstacle value plus one, masked on the Dirichlet nodes; the starts
    are crossed with the requested selection rules.  Only converged solves
    enter the sample, deduplicated in the lumped norm; an entirely failed
    sweep raises :class:`EmptySampleError`.
    """
    rng = np.random.default_rng(seed)
    starts = _random_starts(spec, n_starts, rng)
    variants = _rule_variants(spec, selection_rules)
    tasks, meta = [], []
    for label, vspec in variants:
        for k in range(n_starts):
            tasks.append(
                lambda vs=vspec, s=starts[k]: solve_penalized(vs, cfg, initial=s)
            )
            meta.append((label, k))
    reports = _run_solves(tasks, threads)
    members = [
        SampleMember(rep.solution, rep.eta, label, k, rep)
        for (label, k), rep in zip(meta, reports)
        if rep.converged
    ]
    members = _dedup(spec.mesh, members, dedup_tol)
    return SolutionSample(rho=cfg.rho, members=members, dedup_tol=dedup_tol)


# --- set-convergence study --------------------------------------------------


@dataclass(frozen=True)
class LimitCandidate:
    solution: DiscreteFunction
    eta: np.ndarray
    rule: str
    start: int
    step_distances: tuple
    vi_value: float
    probe_count: int


@dataclass
class KuratowskiDiagnostics:
    """Per-stage diagnostics of a warm-started multi-chain study."""

    rhos: list
    samples: list  # SolutionSample per stage
    violation_sup: list
    violation_l1: list
    chain_distances: list  # d(u_{n+1}, sample_n); nan on the last stage
    candidates: list  # LimitCandidate
    thresholds: dict
    seed: int
    spec: ProblemSpec

    def nearest_point_trace(self, u):
        return nearest_point_trace(self, u)

    def to_json_dict(self, include_solutions=True):
        out = {
            "rhos": list(map(float, self.rhos)),
            "violation_sup": list(map(float, self.violation_sup)),
            "violation_l1": list(map(float, self.violation_l1)),
            "chain_distances": [
                None if np.isnan(d) else float(d) for d in self.chain_distances
            ],
            "sample_sizes": [len(s.members) for s in self.samples],
            "thresholds": {k: (v if isinstance(v, str) else float(v))
                           for k, v in self.thresholds.items()},
            "seed": int(self.seed),
            "candidates": [
                {
                    "rule": c.rule,
                    "start": int(c.start),
                    "vi_value": float(c.vi_value),
                    "probe_count": int(c.probe_count),
                    "step_distances": list(map(float, c.step_distances)),
                    **(
                        {"solution": c.solution.values.tolist(),
                         "eta": c.eta.tolist()}
                        if include_solutions
                        else {}
                    ),
                }
                for c in self.candidates
            ],
        }
        return out

    def csv_rows(self):
        """Rows (rho, violation_sup, violation_l1, chain_distance, vi_residual,
        nearest_point_distance[, clarke_gap]); the boundary column appears only
        when the natural boundary part is nonempty."""
        have_candidate = bool(self.candidates)
        if have_candidate:
            cand = self.candidates[0]
            trace = nearest_point_trace(self, cand.solution)
            near = [t[2] for t in trace]
            vi = cand.vi_value
        else:
            near = [float("nan")] * len(self.rhos)
            vi = float("nan")
        header = ["rho", "violation_sup", "violation_l1", "chain_distance",
                  "vi_residual", "nearest_point_distance"]
        with_boundary = self.spec.has_gamma2
        if with_boundary:
            header.append("clarke_gap")
        rows = [header]
        for n, rho in enumerate(self.rhos):
            row = [
                rho,
                self.violation_sup[n],
                self.violation_l1[n],
                self.chain_distances[n],
                vi,
                near[n],
            ]
            if with_boundary:
                row.append(self._clarke_gap(n))
            rows.append(row)
        return rows

    def _clarke_gap(self, n):
        from .assembly import clarke_directional

        if not self.candidates:
            return float("nan")
        u = self.candidates[0].solution
        member = self.samples[n].members[0].solution
        return clarke_directional(self.spec, u.values, member.values - u.values)


def _probe_set(spec, K, u_vals, seed, bump_rel, n_random):
    """Documented probe family: the projected candidate, projected coordinate
    bumps at every node, and seeded random admissible states near the
    candidate."""
    scale = bump_rel * float(np.max(np.abs(u_vals)))
    if scale == 0.0:
        scale = bump_rel
    probes = [K.project_values(u_vals)]
    n = u_vals.size
    for i in range(n):
        for sgn in (1.0, -1.0):
            v = u_vals.copy()
            v[i] += sgn * scale
            probes.append(K.project_values(v))
    rng = np.random.default_rng((seed, 97))
    noise = rng.normal(size=(n_random, n)) * scale
    for k in range(n_random):
        probes.append(K.project_values(u_vals + noise[k]))
    return probes


def kuratowski_study(
    spec: ProblemSpec,
    schedule,
    cfg: SolverConfig,
    n_starts: int = 5,
    selection_rules=None,
    seed: int = 0,
    dedup_tol: float = 1e-6,
    cauchy_factor: float = 0.5,
    cauchy_window: int = 3,
    probe_bump: float = 0.01,
    n_random_probes: int = 32,
    threads: int = 1,
) -> KuratowskiDiagnostics:
    """Warm-started chains along the schedule with per-stage set diagnostics.

    Each (selection rule, start) pair defines a chain; at every stage all
    still-converging chains are re-solved from their previous states, the
    converged results are deduplicated into the stage sample, and chain step
    distances are measured in the discrete energy-space norm.  Chains whose
    trailing ``cauchy_window`` step distances contract by ``cauchy_factor``
    yield limit candidates, each certified by a variational-inequality
    residual over the documented probe set.
    """
    schedule = [float(r) for r in schedule]
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or not schedule:
        raise ConfigurationError("schedule must be nonempty and strictly decreasing")
    if any(r <= 0 for r in schedule):
        raise ConfigurationError("schedule must be positive")

    rng = np.random.default_rng(seed)
    starts = _random_starts(spec, n_starts, rng)
    variants = _rule_variants(spec, selection_rules)
    chains = []  # (label, start_idx, vspec, state, alive, states_per_stage)
    for label, vspec in variants:
        for k in range(n_starts):
            chains.append(
                {"label": label, "start": k, "spec": vspec, "state": starts[k],
                 "alive": True, "solutions": [], "etas": [], "reports": []}
            )

    eps0 = spec.eps_grad if cfg.eps_grad is None else cfg.eps_grad
    delta0 = cfg.delta_boundary
    samples = []
    for stage, rho in enumerate(schedule):
        factor = rho / schedule[0]
        stage_cfg = replace(
            cfg,
            rho=rho,
            eps_grad=eps0 * factor if eps0 > 0 else eps0,
            delta_boundary=delta0 * factor if delta0 > 0 else delta0,
        )
        live = [c for c in chains if c["alive"]]
        tasks = [
            (lambda ch=c: solve_penalized(ch["spec"], stage_cfg,
                                          initial=ch["state"]))
            for c in live
        ]
        reports = _run_solves(tasks, threads)
        stage_members = []
        for c, rep in zip(live, reports):
            if rep.converged:
                c["state"] = rep.solution.values
                c["solutions"].append(rep.solution.values)
                c["etas"].append(rep.eta)
                c["reports"].append(rep)
                stage_members.append(
                    SampleMember(rep.solution, rep.eta, c["label"], c["start"], rep)
                )
            else:
                c["alive"] = False
        stage_members = _dedup(spec.mesh, stage_members, dedup_tol)
        samples.append(
            SolutionSample(rho=rho, members=stage_members, dedup_tol=dedup_tol)
        )

    violation_sup = [max(m.report.obstacle_violation_sup for m in s.members)
                     for s in samples]
    violation_l1 = [max(m.report.obstacle_violation_l1 for m in s.members)
                    for s in samples]

    # chain step distances and limit candidates
    K = constraint_set(spec)
    candidates = []
    for c in chains:
        sols = c["solutions"]
        if len(sols) != len(schedule):
            continue
        steps = tuple(
            _energy_distance(spec, sols[k + 1], sols[k])
            for k in range(len(sols) - 1)
        )
        if len(steps) < cauchy_window:
            continue
        seq = steps[-(cauchy_window + 1):]
        cauchy = all(b <= cauchy_factor * a for a, b in zip(seq[:-1], seq[1:]))
        if not cauchy:
            continue
        u_vals = sols[-1]
        probes = _probe_set(spec, K, u_vals, seed, probe_bump, n_random_probes)
        vi = vi_residual(c["spec"], K.project_values(u_vals), c["etas"][-1], probes)
        candidates.append(
            LimitCandidate(
                solution=DiscreteFunction(spec.mesh, u_vals),
                eta=c["etas"][-1],
                rule=c["label"],
                start=c["start"],
                step_distances=steps,
                vi_value=vi,
                probe_count=len(probes),
            )
        )
    candidates = _dedup(spec.mesh, candidates, dedup_tol)

    chain_distances = []
    principal = candidates[0] if candidates else None
    for n in range(len(schedule)):
        if n + 1 >= len(schedule):
            chain_distances.append(float("nan"))
            break
        if principal is not None:
            nxt = _chain_state(chains, principal, n + 1)
        else:
            nxt = None
        if nxt is None:
            alive = [c for c in chains if len(c["solutions"]) > n + 1]
            nxt = alive[0]["solutions"][n + 1] if alive else None
        if nxt is None:
            chain_distances.append(float("nan"))
            continue
        dist = min(
            _energy_distance(spec, nxt, m.solution.values)
            for m in samples[n].members
        )
        chain_distances.append(dist)

    return KuratowskiDiagnostics(
        rhos=schedule,
        samples=samples,
        violation_sup=violation_sup,
        violation_l1=violation_l1,
        chain_distances=chain_distances,
        candidates=candidates,
        thresholds={
            "dedup_tol": dedup_tol,
            "cauchy_factor": cauchy_factor,
            "cauchy_window": cauchy_window,
            "probe_bump": probe_bump,
            "n_random_probes": n_random_probes,
        },
        seed=seed,
        spec=spec,
    )


def _chain_state(chains, candidate, stage):
    for c in chains:
        if c["label"] == candidate.rule and c["start"] == candidate.start:
            if len(c["solutions"]) > stage:
                return c["solutions"][stage]
    return None


def nearest_point_trace(diagnostics: KuratowskiDiagnostics, u):
    """Per-stage nearest sample member to ``u`` in the energy-space norm.

    Returns a list of ``(rho, member_index, distance)``.  ``u`` must be one of
    the study's limit candidates (up to the dedup tolerance).
    """
    u_vals = u.values if isinstance(u, DiscreteFunction) else np.asarray(u, float)
    spec = diagnostics.spec
    tol = diagnostics.thresholds["dedup_tol"]
    if not any(
        _lumped_distance(spec.mesh, u_vals, c.solution.values) <= tol
        for c in diagnostics.candidates
    ):
        raise ConfigurationError("trace target is not a limit candidate of the study")
    trace = []
    for rho, sample in zip(diagnostics.rhos, diagnostics.samples):
        dists = [
            _energy_distance(spec, u_vals, m.solution.values)
            for m in sample.members
        ]
        j = int(np.argmin(dists))
        trace.append((float(rho), j, float(dists[j])))
    return trace


# --- QP oracle --------------------------------------------------------------


@dataclass(frozen=True)
class QPSolution:
    values: np.ndarray
    active: np.ndarray
    multipliers: np.ndarray
    mode: str
    iterations: int
    objective: float


def _qp_data(spec):
    """Quadratic model (S, b) on the free nodes for the linear-diffusion case."""
    if spec.phase.p != 2.0 or spec.phase.q != 2.0:
        raise ConfigurationError("the QP oracle requires p = q = 2")
    if spec.reaction.state_dependent:
        raise ConfigurationError(
            "the QP oracle requires a state-independent reaction selection"
        )
    if not spec.boundary.quadratic:
        raise ConfigurationError(
            "the QP oracle requires a quadratic (or zero) boundary potential"
        )
    mesh = spec.mesh
    S = operator_jacobian(spec, np.zeros(mesh.n_nodes))
    params = dict(spec.boundary.params)
    if spec.boundary.name == "smooth_quadratic":
        S = S + sp.diags(spec.gamma2_weights * params["alpha"])
    xi = np.zeros((mesh.n_nodes, mesh.dim))
    eta = spec.reaction.select(mesh.nodes, np.zeros(mesh.n_nodes), xi)
    b = mesh.node_volume_weights * eta
    free = ~mesh.dirichlet_mask
    idx = np.flatnonzero(free)
    S_ff = S[np.ix_(idx, idx)].toarray() if sp.issparse(S) else S[np.ix_(idx, idx)]
    return S.tocsr(), S_ff, b, idx


def qp_oracle(
    spec: ProblemSpec,
    mode="enumeration",
    max_enum_nodes=14,
    pg_tol=1e-12,
    pg_max_iter=2_000_000,
) -> QPSolution:
    """Reference solution of the linear-diffusion obstacle problem.

    ``enumeration`` walks all active sets of the nodes with finite obstacle
    (at most ``max_enum_nodes``), keeping the candidates that satisfy primal
    and dual feasibility; ``projected_gradient`` iterates the box projection
    with step one over the operator norm until the update stalls below
    ``pg_tol``.  Failure to certify yields :class:`OracleFailure`.
    """
    S, S_ff, b, idx = _qp_data(spec)
    mesh = spec.mesh
    phi = spec.obstacle.values
    b_f = b[idx]
    phi_f = phi[idx]
    nf = idx.size
    constrained = np.flatnonzero(np.isfinite(phi_f))

    if mode == "enumeration":
        m = constrained.size
        if m > max_enum_nodes:
            raise ConfigurationError(
                f"enumeration oracle limited to {max_enum_nodes} constrained "
                f"nodes, got {m}"
            )
        scale = max(1.0, float(np.abs(S_ff).max()), float(np.abs(b_f).max()))
        tol = 1e-10 * scale
        best = None
        for bits in range(1 << m):
            active = [constrained[j] for j in range(m) if bits >> j & 1]
            inactive = np.setdiff1d(np.arange(nf), active)
            u = np.empty(nf)
            u[active] = phi_f[active]
            A_ii = S_ff[np.ix_(inactive, inactive)]
            rhs = b_f[inactive]
            if active:
                rhs = rhs - S_ff[np.ix_(inactive, active)] @ phi_f[active]
            try:
                u[inactive] = np.linalg.solve(A_ii, rhs)
            except np.linalg.LinAlgError:
                continue
            lam = np.zeros(nf)
            if active:
                lam[active] = b_f[active] - S_ff[active] @ u
            # feasibility
            viol = u[constrained] - phi_f[constrained]
            if np.any(viol > tol):
                continue
            if np.any(lam[active] < -tol):
                continue
            obj = 0.5 * u @ S_ff @ u - b_f @ u
            if best is None or obj < best[0]:
                best = (obj, u, lam, np.array(sorted(active), dtype=int))
        if best is None:
            raise OracleFailure("active-set enumeration found no KKT point")
        obj, u_f, lam, active = best
        full = np.zeros(mesh.n_nodes)
        full[idx] = u_f
        mult = np.zeros(mesh.n_nodes)
        mult[idx] = lam
        return QPSolution(full, idx[active], mult, "enumeration", 1 << m, float(obj))

    if mode == "projected_gradient":
        # operator-norm estimate by power iteration (deterministic start)
        v = np.ones(nf) / np.sqrt(nf)
        for _ in range(100):
            v = S_ff @ v
            nv = np.linalg.norm(v)
            if nv == 0:
                raise OracleFailure("projected gradient: zero operator")
            v /= nv
        lam_max = float(v @ S_ff @ v)
        step = 1.0 / lam_max
        u = np.zeros(nf)
        it = 0
        while it < pg_max_iter:
            it += 1
            u_new = np.minimum(u - step * (S_ff @ u - b_f), phi_f)
            change = float(np.max(np.abs(u_new - u)))
            u = u_new
            if change <= pg_tol:
                break
        else:
            raise OracleFailure("projected gradient did not reach tolerance")
        lam = b_f - S_ff @ u
        active = constrained[
            np.abs(u[constrained] - phi_f[constrained]) <= 1e-9 * (1 + np.abs(phi_f[constrained]))
        ]
        full = np.zeros(mesh.n_nodes)
        full[idx] = u
        mult = np.zeros(mesh.n_nodes)
        mult[idx] = np.where(np.isfinite(phi_f), lam, 0.0)
        obj = float(0.5 * u @ S_ff @ u - b_f @ u)
        return QPSolution(full, idx[active], mult, "projected_gradient", it, obj)

    raise ConfigurationError(f"unknown oracle mode {mode!r}")


# --- hypothesis validation --------------------------------------------------


@dataclass
class HypothesisReport:
    lambda1_est: float
    lambda2_est: float
    lambda1_certified: bool
    lambda2_certified: bool
    deltas: dict
    smallness_lhs: float
    passes: bool
    notes: list

    def to_json_dict(self):
        return {
            "lambda1_est": float(self.lambda1_est),
            "lambda2_est": float(self.lambda2_est),
            "lambda1_certified": self.lambda1_certified,
            "lambda2_certified": self.lambda2_certified,
            "deltas": {k: float(v) for k, v in self.deltas.items()},
            "smallness_lhs": float(self.smallness_lhs),
            "passes": self.passes,
            "notes": list(self.notes),
        }


def _stiffness_mass(spec):
    mesh = spec.mesh
    nv = mesh.dim + 1
    GtG = np.einsum("eka,ekb->eab", mesh.gradient_maps, mesh.gradient_maps)
    blocks = mesh.element_volumes[:, None, None] * GtG
    rows = np.repeat(mesh.elements, nv, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nv)).ravel()
    S = sp.csr_matrix((blocks.ravel(), (rows, cols)),
                      shape=(mesh.n_nodes, mesh.n_nodes))
    M = mesh.node_volume_weights
    return S, M


def _p_norm_volume(mesh, u, p):
    return float(np.dot(mesh.node_volume_weights, np.abs(u) ** p)) ** (1 / p)


def _p_norm_gradient(mesh, u, p):
    g = mesh.element_gradients(u)
    gn = np.sqrt(np.sum(g * g, axis=1))
    return float(np.dot(mesh.element_volumes, gn**p)) ** (1 / p)


def _p_norm_boundary(mesh, u, p, bw):
    return float(np.dot(bw, np.abs(u) ** p)) ** (1 / p)


def _ascent_ratio(mesh, free, numer, denom, grad_numer, grad_denom, starts, iters=250):
    """Projected gradient ascent on log(numer/denom) over the free nodes."""
    best = 0.0
    for u0 in starts:
        u = u0.copy()
        u[~free] = 0.0
        nu = numer(u)
        du = denom(u)
        if nu == 0.0 or du == 0.0:
            continue
        val = nu / du
        step = 0.5
        for _ in range(iters):
            g = grad_numer(u) / nu - grad_denom(u) / du
            g[~free] = 0.0
            gn = np.linalg.norm(g)
            if gn == 0.0:
                break
            u_try = u + step * g / gn
            nu_t, du_t = numer(u_try), denom(u_try)
            if du_t == 0.0:
                step *= 0.5
                continue
            val_t = nu_t / du_t
            if val_t > val:
                u, val, nu, du = u_try, val_t, nu_t, du_t
                step *= 1.1
            else:
                step *= 0.5
                if step < 1e-10:
                    break
        best = max(best, val)
    return best


def validate_hypotheses(spec: ProblemSpec) -> HypothesisReport:
    """Check the growth/smallness assumptions on a concrete instance.

    The embedding constants are certified by a generalized eigenvalue solve
    when the lower exponent is 2 and otherwise estimated by projected gradient
    ascent from seeded random starts (flagged non-certified).  The smallness
    left-hand side combines the declared reaction/boundary growth constants
    with the indicator ``delta(theta) = 1`` iff ``theta`` equals the lower
    exponent.  Failure is reported, never raised.
    """
    mesh = spec.mesh
    p = spec.phase.p
    notes = []
    S, M = _stiffness_mass(spec)
    free = ~mesh.dirichlet_mask
    idx = np.flatnonzero(free)
    S_ff = S[np.ix_(idx, idx)].toarray()
    bw = boundary_lumped_weights(mesh)

    if p == 2.0:
        M_ff = np.diag(M[idx])
        sig = scipy.linalg.eigh(S_ff, M_ff, eigvals_only=True,
                                subset_by_index=[0, 0])[0]
        lambda1 = 1.0 / np.sqrt(sig)
        lambda1_cert = True
    else:
        rng = np.random.default_rng(20_240_001)
        starts = rng.standard_normal((10, mesh.n_nodes))
        lambda1 = _ascent_ratio(
            mesh, free,
            lambda u: _p_norm_volume(mesh, u, p),
            lambda u: _p_norm_gradient(mesh, u, p),
            lambda u: _grad_p_norm_volume(mesh, u, p),
            lambda u: _grad_p_norm_gradient(mesh, u, p),
            starts,
        )
        lambda1_cert = False
        notes.append(
            "lambda1 estimated by multi-start gradient ascent (non-certified)"
        )

    if not np.any(bw > 0):
        lambda2 = 0.0
        lambda2_cert = True
        notes.append("natural boundary part empty: lambda2 = 0")
    elif p == 2.0:
        B_ff = np.diag(bw[idx])
        # largest ratio u'Bu / u'Su over free nodes
        vals = scipy.linalg.eigh(B_ff, S_ff, eigvals_only=True)
        lambda2 = float(np.sqrt(max(vals[-1], 0.0)))
        lambda2_cert = True
    else:
        rng = np.random.default_rng(20_240_002)
        starts = rng.standard_normal((10, mesh.n_nodes))
        lambda2 = _ascent_ratio(
            mesh, free,
            lambda u: _p_norm_boundary(mesh, u, p, bw),
            lambda u: _p_norm_gradient(mesh, u, p),
            lambda u: _grad_p_norm_boundary(mesh, u, p, bw),
            lambda u: _grad_p_norm_gradient(mesh, u, p),
            starts,
        )
        lambda2_cert = False
        notes.append(
            "lambda2 estimated by multi-start gradient ascent (non-certified)"
        )

    g = spec.reaction.growth
    bg = spec.boundary.growth

    def delta(theta):
        return 1.0 if abs(theta - p) <= 1e-12 else 0.0

    deltas = {
        "theta1": delta(bg.theta1),
        "theta2": delta(g.theta2),
        "theta3": delta(g.theta3),
    }
    lhs = (
        g.e_f * deltas["theta2"]
        + g.g_f * lambda1 * deltas["theta3"]
        + bg.c_j * lambda2 * deltas["theta1"]
    )
    passes = lhs < 1.0
    for label, theta in (("theta1", bg.theta1), ("theta2", g.theta2),
                         ("theta3", g.theta3)):
        if theta > p + 1e-12:
            notes.append(
                f"{label} = {theta} exceeds the lower exponent p = {p}: "
                "growth hypothesis violated"
            )
            passes = False
    if lhs >= 1.0:
        notes.append(
            f"smallness condition fails: lhs = {lhs} >= 1 "
            "(reported, not fatal)"
        )
    N = float(mesh.dim)
    if p < N:
        p_star = p * N / (N - p)
        if spec.phase.q >= p_star:
            notes.append(
                f"upper exponent q = {spec.phase.q} is not below the critical "
                f"embedding exponent {p_star}: flagged, not forbidden"
            )
    notes.append("obstacle is admissible (nonnegative where finite)")
    return HypothesisReport(
        lambda1_est=float(lambda1),
        lambda2_est=float(lambda2),
        lambda1_certified=lambda1_cert,
        lambda2_certified=lambda2_cert,
        deltas=deltas,
        smallness_lhs=float(lhs),
        passes=passes,
        notes=notes,
    )


def _grad_p_norm_volume(mesh, u, p):
    w = mesh.node_volume_weights
    norm = _p_norm_volume(mesh, u, p)
    if norm == 0:
        return np.zeros_like(u)
    return norm ** (1 - p) * w * np.abs(u) ** (p - 1) * np.sign(u)


def _grad_p_norm_gradient(mesh, u, p):
    g = mesh.element_gradients(u)
    gn = np.sqrt(np.sum(g * g, axis=1))
    norm = float(np.dot(mesh.element_volumes, gn**p)) ** (1 / p)
    if norm == 0:
        return np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(gn > 0, gn ** (p - 2.0), 0.0)
    local = np.einsum("ekv,ek->ev", mesh.gradient_maps, g)
    local = local * (mesh.element_volumes * coef)[:, None]
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements.ravel(), local.ravel())
    return norm ** (1 - p) * out


def _grad_p_norm_boundary(mesh, u, p, bw):
    norm = _p_norm_boundary(mesh, u, p, bw)
    if norm == 0:
        return np.zeros_like(u)
    return norm ** (1 - p) * bw * np.abs(u) ** (p - 1) * np.sign(u)
