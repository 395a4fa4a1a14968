"""Implicit solver for the heterogeneous quasi-static plasticity problem.

The displacement satisfies the quasi-static balance -div(sigma) = f with
Dirichlet data, Hooke's law sigma = C^-1 e, the additive split of the
symmetrized gradient into e + p, and the regularized flow rule for p with
kinematic hardening.  Oscillating coefficients are read from a sampled
medium at the element barycenters at scale eps.

Time discretization is backward Euler; each step runs a global Newton
iteration on the displacement with the element-level plastic update solved
in closed form and a consistent algorithmic tangent.  The scheme never looks
ahead in time, so truncating the data after a step reproduces the earlier
steps bit-identically.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError
from .fem import P1Space, pcg, solve_elastic
from .flowrules import VON_MISES
from .loading import AffineBoundary
from .returnmap import MaterialArrays, plastic_step
from .tensors import deviatoric, mandel_dim


@dataclass
class EpsProblemConfig:
    """Problem data for one heterogeneous solve.

    ``dirichlet`` is an AffineBoundary or a callable U(t, points) -> (n, d)
    with U(0, .) = 0.  ``load`` is a callable f(t, points) -> (n, d) with
    f(0, .) = 0, or None.  The initial plastic strain is zero.
    """

    mesh: object
    medium: object
    epsilon: float
    delta: float
    time_grid: np.ndarray
    dirichlet: object
    load: object = None
    rule_kind: str = VON_MISES
    newton_rtol: float = 1e-8
    newton_maxiter: int = 50
    cg_rtol: float = 1e-12
    sigma_y_override: float = None

    def __post_init__(self):
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        if self.time_grid.ndim != 1 or self.time_grid[0] != 0.0 \
                or np.any(np.diff(self.time_grid) <= 0):
            raise ConfigurationError("time grid must start at 0 and increase strictly")
        if not self.epsilon > 0:
            raise ConfigurationError(f"scale eps must be positive, got {self.epsilon}")
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")


@dataclass
class PlasticTrajectory:
    """Fields of one solve: nodal displacements plus element stress state."""

    times: np.ndarray
    u: np.ndarray          # (steps+1, nv, d)
    sigma: np.ndarray      # (steps+1, ne, k)
    e: np.ndarray          # elastic strains
    p: np.ndarray          # plastic strains
    newton_iters: list
    residual_norms: list
    space: object = field(repr=False, default=None)
    mats: object = field(repr=False, default=None)
    config: object = field(repr=False, default=None)


def _boundary_values(config, t, points):
    if isinstance(config.dirichlet, AffineBoundary):
        from .tensors import unpack

        xi = unpack(config.dirichlet.strain_at(t), 2)
        return points @ xi.T
    return np.asarray(config.dirichlet(t, points), dtype=float)


def _load_vector(space, config, t):
    if config.load is None:
        return np.zeros(space.n_packed)
    values = np.asarray(config.load(t, space.mesh.barycenters), dtype=float)
    return space.load_vector(values)


def _materials(config):
    mats = MaterialArrays.from_medium(config.medium, config.mesh.barycenters,
                                      config.epsilon)
    if config.sigma_y_override is not None:
        mats = MaterialArrays(mats.a_vol, mats.a_dev, mats.hardening,
                              np.full_like(mats.yield_stress, config.sigma_y_override),
                              dim=mats.dim)
    mats.validate_elliptic()
    return mats


def newton_solve(space, mats, strain_offset, p_old, u, dt, delta, kind,
                 f_ext, rtol, maxiter, cg_rtol, periodic=False, step=None):
    """Global Newton iteration of one backward-Euler step.

    ``u`` enters with the Dirichlet rows already set (packed vector) and is
    updated in place on the free dofs; for ``periodic`` solves all dofs are
    free and the translation kernel is projected out of the updates.  If a
    full tangent step fails to reduce the residual, the correction is damped
    by halving.  Returns (z, p_new, iterations, final_residual).
    """
    from .fem import solve_periodic

    free = space.free_dofs

    def evaluate(tangent):
        strains = strain_offset + space.element_strains(space.unpack_field(u))
        z, p_new, moduli = plastic_step(strains, p_old, mats, dt, delta, kind,
                                        tangent=tangent)
        f_int = space.internal_forces(z)
        res = np.linalg.norm((f_ext - f_int)[free])
        return z, p_new, moduli, f_int, res

    # roundoff floor: force scale assembled without cancellation
    strains0 = strain_offset + space.element_strains(space.unpack_field(u))
    z0, _, _ = plastic_step(strains0, p_old, mats, dt, delta, kind, tangent=False)
    contrib = np.einsum("e,eki,ek->ei", np.abs(space.mesh.volumes),
                        np.abs(space.B), np.abs(z0))
    floor = 1e-14 * (np.linalg.norm(np.bincount(
        space.element_dofs.ravel(), weights=contrib.ravel(),
        minlength=space.n_packed)[free]) + np.linalg.norm(f_ext[free]))

    z, p_new, moduli, f_int, res_norm = evaluate(tangent=True)
    denom = max(res_norm, np.linalg.norm(f_ext[free]))
    for it in range(maxiter):
        if res_norm <= rtol * denom + floor:
            return z, p_new, it, res_norm
        A = space.assemble_operator(moduli)
        if periodic:
            du = solve_periodic(space, A, f_ext - f_int, rtol=cg_rtol)
        else:
            Aff = A[free][:, free]
            du, _ = pcg(Aff, (f_ext - f_int)[free], Aff.diagonal(), rtol=cg_rtol)
        alpha, reduced = 1.0, False
        for _ in range(11):
            if periodic:
                u += alpha * du
            else:
                u[free] += alpha * du
            z_try, p_try, moduli_try, f_try, res_try = evaluate(tangent=True)
            if res_try < res_norm or res_try <= rtol * denom + floor:
                z, p_new, moduli, f_int, res_norm = z_try, p_try, moduli_try, f_try, res_try
                reduced = True
                break
            if periodic:
                u -= alpha * du
            else:
                u[free] -= alpha * du
            alpha *= 0.5
        if not reduced:
            raise NumericalError(
                "Newton step failed to reduce the equilibrium residual",
                step=step, residual=float(res_norm),
            )
    raise NumericalError("Newton did not converge", step=step,
                         residual=float(res_norm))


def solve_eps(config):
    """Solve the heterogeneous plasticity problem on the configured mesh.

    Returns a PlasticTrajectory whose fields satisfy, per element and step,
    the additive strain decomposition, Hooke's law, and the discrete flow
    rule up to solver tolerances.
    """
    mesh = config.mesh
    space = P1Space(mesh)
    mats = _materials(config)
    times = config.time_grid
    steps = times.size - 1
    k = mandel_dim(2)

    bc0 = _boundary_values(config, 0.0, mesh.vertices[space.dirichlet_vertices])
    if bc0.size and np.abs(bc0).max() > 1e-12:
        raise ConfigurationError("boundary data must vanish at t=0")
    if config.load is not None:
        f0 = np.asarray(config.load(0.0, mesh.barycenters))
        if np.abs(f0).max() > 1e-12:
            raise ConfigurationError("load must vanish at t=0")

    u_hist = np.zeros((steps + 1, mesh.n_vertices, 2))
    sig_hist = np.zeros((steps + 1, mesh.n_elements, k))
    p_hist = np.zeros((steps + 1, mesh.n_elements, k))
    iters, residuals = [], []

    u = np.zeros(space.n_packed)
    p = np.zeros((mesh.n_elements, k))
    for m in range(1, steps + 1):
        t, dt = times[m], times[m] - times[m - 1]
        bc_field = space.zero_field()
        idx = space.dirichlet_vertices
        bc_field[idx] = _boundary_values(config, t, mesh.vertices[idx])
        packed_bc = space.pack_field(bc_field)
        u[~space.free_mask] = packed_bc[~space.free_mask]
        f_ext = _load_vector(space, config, t)
        z, p, n_it, res = newton_solve(
            space, mats, 0.0, p, u, dt, config.delta, config.rule_kind,
            f_ext, config.newton_rtol, config.newton_maxiter, config.cg_rtol,
            step=m,
        )
        u_hist[m] = space.unpack_field(u)
        sig_hist[m] = z
        p_hist[m] = p
        iters.append(n_it)
        residuals.append(res)

    if isinstance(config.dirichlet, AffineBoundary) and config.dirichlet.offset is not None:
        for m in range(1, steps + 1):
            u_hist[m] = u_hist[m] + config.dirichlet.offset_at(times[m])

    e_hist = np.stack([mats.apply_compliance(sig_hist[m]) for m in range(steps + 1)])
    return PlasticTrajectory(times=times, u=u_hist, sigma=sig_hist, e=e_hist,
                             p=p_hist, newton_iters=iters, residual_norms=residuals,
                             space=space, mats=mats, config=config)


def average_stress(traj, region=None):
    """Volume-weighted element-stress average per time step, (steps+1, k)."""
    vol = traj.space.mesh.volumes
    if region is None:
        region = np.arange(vol.size)
    region = np.asarray(region, dtype=np.int64)
    if region.size == 0:
        raise ConfigurationError("average over an empty element region")
    w = vol[region]
    return np.einsum("e,mek->mk", w, traj.sigma[:, region, :]) / w.sum()


def elastic_reference(config):
    """Per-step linear-elastic displacements with the same data (oracle hook)."""
    mesh = config.mesh
    space = P1Space(mesh)
    mats = _materials(config)
    moduli = mats.stiffness_moduli()
    out = [np.zeros((mesh.n_vertices, 2))]
    for t in config.time_grid[1:]:
        g = lambda pts, t=t: _boundary_values(config, t, pts)
        f = None if config.load is None else (lambda pts, t=t: config.load(t, pts))
        out.append(solve_elastic(space, moduli, f=f, g=g, rtol=config.cg_rtol))
    return np.stack(out)


@dataclass
class ResidualReport:
    """Norms, constitutive residuals and the discrete energy balance."""

    norms: dict
    data_norm: float
    ratio: float
    max_decomposition_residual: float
    max_constitutive_residual: float
    max_flow_residual: float
    energy_balance_defect: float
    energy_increment_gap: float


def _h1_time_l2_norm(times, fields, weights):
    """Discrete H1(0,T; L2) norm of per-step fields (steps+1, n, k)."""
    dt = np.diff(times)
    w = weights / weights.sum()
    sq = np.einsum("e,mek->m", w, fields**2)
    rate = np.diff(fields, axis=0) / dt[:, None, None]
    rate_sq = np.einsum("e,mek->m", w, rate**2)
    mid = 0.5 * (sq[1:] + sq[:-1])
    return float(np.sqrt(np.sum(dt * (mid + rate_sq))))


def residual_report(traj, config):
    """Diagnostics of a trajectory: norms, pointwise residuals, energy balance.

    The energy balance defect tests the telescoped discrete identity that the
    backward-Euler scheme satisfies exactly up to solver tolerances; the
    increment gap is the quadratic remainder separating it from the
    continuous-time identity and shrinks linearly with the step size.
    """
    space, mats = traj.space, traj.mats
    mesh = space.mesh
    vol = mesh.volumes
    times = traj.times

    u_eff = traj.u
    if isinstance(config.dirichlet, AffineBoundary) and config.dirichlet.offset is not None:
        u_eff = traj.u - np.stack([np.tile(config.dirichlet.offset_at(t),
                                           (mesh.n_vertices, 1)) for t in times])

    strains = np.stack([space.element_strains(u_eff[m]) for m in range(times.size)])
    decomp = np.abs(strains - traj.e - traj.p).max(axis=-1)
    scale = 1.0 + np.abs(traj.e).max(axis=-1) + np.abs(traj.p).max(axis=-1)
    max_decomp = float((decomp / scale).max())

    hooke = np.abs(traj.e - np.stack([mats.apply_compliance(traj.sigma[m])
                                      for m in range(times.size)])).max()

    tau = traj.sigma - mats.hardening[None, :, None] * traj.p
    flow_res = 0.0
    for m in range(1, times.size):
        dt = times[m] - times[m - 1]
        rates = (traj.p[m] - traj.p[m - 1]) / dt
        dev_tau = deviatoric(tau[m], 2)
        s = np.linalg.norm(dev_tau, axis=-1)
        if config.rule_kind == VON_MISES:
            mag = np.maximum(s - mats.yield_stress, 0.0) / config.delta
        else:
            mag = np.minimum(s / config.delta, mats.yield_stress)
        safe = np.where(s > 0, s, 1.0)
        grads = mag[:, None] * dev_tau / safe[:, None]
        flow_res = max(flow_res, float(np.abs(rates - grads).max()
                                       / (1.0 + float(np.abs(grads).max()))))

    u_at_bary = np.stack([u_eff[m][mesh.simplices].mean(axis=1)
                          for m in range(times.size)])
    norms = {
        "u": _h1_time_l2_norm(times, u_at_bary, vol),
        "e": _h1_time_l2_norm(times, traj.e, vol),
        "p": _h1_time_l2_norm(times, traj.p, vol),
        "sigma": _h1_time_l2_norm(times, traj.sigma, vol),
    }

    if isinstance(config.dirichlet, AffineBoundary):
        data_norm = config.dirichlet.path.h1_norm()
    else:
        series = np.stack([
            np.asarray(config.dirichlet(t, mesh.vertices))[mesh.simplices].mean(axis=1)
            for t in times
        ])
        data_norm = _h1_time_l2_norm(times, series, vol)
    if config.load is not None:
        loads = np.stack([np.asarray(config.load(t, mesh.barycenters)) for t in times])
        data_norm += _h1_time_l2_norm(times, loads, vol)

    # discrete energy bookkeeping
    a_e = np.stack([mats.apply_stiffness(traj.e[m]) for m in range(times.size)])
    energy = 0.5 * np.einsum("e,mek,mek->m", vol, traj.e, a_e) \
        + 0.5 * np.einsum("e,mek,mek->m", vol,
                          traj.p, mats.hardening[None, :, None] * traj.p)
    defect_tight = 0.0
    gap_running = 0.0
    scale_acc = abs(energy[-1]) + 1e-300
    for m in range(1, times.size):
        dp = traj.p[m] - traj.p[m - 1]
        de = traj.e[m] - traj.e[m - 1]
        diss = np.einsum("e,ek,ek->", vol, tau[m], dp)
        quad = 0.5 * np.einsum("e,ek,ek->", vol, de, mats.apply_stiffness(de)) \
            + 0.5 * np.einsum("e,ek,ek->", vol, dp, mats.hardening[:, None] * dp)
        du = u_eff[m] - u_eff[m - 1]
        dU = _boundary_values(config, times[m], mesh.vertices) \
            - _boundary_values(config, times[m - 1], mesh.vertices)
        work_bc = np.einsum("e,ek,ek->", vol, traj.sigma[m],
                            space.element_strains(dU))
        f_ext = _load_vector(space, config, times[m])
        work_f = f_ext @ space.pack_field(du - dU)
        rhs = work_bc + work_f
        defect_tight += (energy[m] - energy[m - 1]) + diss + quad - rhs
        gap_running += quad
        scale_acc += abs(diss) + abs(rhs) + abs(quad)

    return ResidualReport(
        norms=norms,
        data_norm=float(data_norm),
        ratio=float((norms["u"] + norms["e"] + norms["p"] + norms["sigma"])
                    / max(data_norm, 1e-300)),
        max_decomposition_residual=max_decomp,
        max_constitutive_residual=float(hooke),
        max_flow_residual=float(flow_res),
        energy_balance_defect=float(abs(defect_tight) / scale_acc),
        energy_increment_gap=float(gap_running / scale_acc),
    )
