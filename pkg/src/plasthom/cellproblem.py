"""Cell problems on periodized volumes and the effective operators.

Given a strain path xi(t) with xi(0) = 0, the cell problem evolves a triple
(p, z, v) per sample medium: p is the plastic strain, z the stress, and v
the gradient of a periodic corrector displacement.  Per backward-Euler step

    z = C^-1 (xi + v^s - p),   dp/dt = dPsi^delta(z - B p),

with z discretely divergence-free: its weak divergence vanishes against all
periodic P1 test fields.  The effective stress evolution is the expectation
of the volume average of z over Monte-Carlo samples of the medium; the
effective plastic strain comes from p the same way.  The probability-space
problem is realized as a space problem on a periodized block of i.i.d.
cells plus Monte-Carlo averaging, which is the single largest modeling
approximation of the pipeline.

The scheme is causal: values on [0, t] never depend on the path after t,
and re-running a truncated path reproduces the earlier steps bit-identically.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fem import P1Space, mesh_torus
from .finescale import newton_solve
from .flowrules import VON_MISES
from .loading import StrainPath  # noqa: F401  (part of this module's surface)
from .media import PeriodizedMedium
from .returnmap import MaterialArrays
from .tensors import mandel_dim, pack


@dataclass(frozen=True)
class RveConfig:
    """Periodized-volume discretization: block size, mesh, sample budget."""

    n_cells: int
    refine: int = 1
    n_samples: int = 1
    delta: float = 1e-2
    law: object = None
    base_seed: int = 0
    rule_kind: str = VON_MISES
    newton_rtol: float = 1e-10
    cg_rtol: float = 1e-12

    def __post_init__(self):
        if self.n_cells < 1 or self.n_samples < 1 or self.refine < 1:
            raise ConfigurationError("RVE needs N >= 1, r >= 1 and M >= 1")
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")

    def sample_seed(self, j):
        return self.base_seed + j


@dataclass
class CellTrajectory:
    """Per-step fields of one sample cell problem."""

    times: np.ndarray
    p: np.ndarray        # (steps+1, ne, k)
    z: np.ndarray        # (steps+1, ne, k)
    v: np.ndarray        # (steps+1, ne, d, d) corrector gradients
    phi: np.ndarray      # (steps+1, nv, d) corrector displacements
    newton_iters: list
    residual_norms: list
    space: object = field(repr=False, default=None)
    mats: object = field(repr=False, default=None)

    def volume_average_z(self):
        w = self.space.mesh.volumes
        return np.einsum("e,mek->mk", w, self.z) / w.sum()

    def volume_average_p(self):
        w = self.space.mesh.volumes
        return np.einsum("e,mek->mk", w, self.p) / w.sum()

    def mean_corrector_gradient(self):
        w = self.space.mesh.volumes
        return np.einsum("e,meab->mab", w, self.v) / w.sum()


@dataclass
class SigmaResult:
    """Effective stress and plastic-strain evolutions with sampling error."""

    times: np.ndarray
    sigma: np.ndarray      # (steps+1, k)
    pi: np.ndarray         # (steps+1, k)
    mc_stderr: np.ndarray  # (steps+1, k)
    per_sample_sigma: np.ndarray
    per_sample_pi: np.ndarray
    config: dict


def build_rve_space(cfg):
    mesh = mesh_torus(cfg.n_cells, cfg.refine)
    return P1Space(mesh)


def solve_cell(medium, xi_path, delta, time_grid, space=None,
               rule_kind=VON_MISES, newton_rtol=1e-10, cg_rtol=1e-12):
    """Advance one sample's cell problem along the whole strain path.

    ``medium`` is a PeriodizedMedium whose cells align with the torus mesh.
    The per-element plastic update and the periodic corrector solve are
    nested in one Newton iteration per step.
    """
    time_grid = np.asarray(time_grid, dtype=float)
    if time_grid[0] != 0.0 or np.any(np.diff(time_grid) <= 0):
        raise ConfigurationError("time grid must start at 0 and increase strictly")
    if space is None:
        space = P1Space(mesh_torus(medium.n_cells, 1))
    mesh = space.mesh
    mats = MaterialArrays.from_medium(medium, mesh.barycenters)
    mats.validate_elliptic()

    steps = time_grid.size - 1
    k = mandel_dim(2)
    p_hist = np.zeros((steps + 1, mesh.n_elements, k))
    z_hist = np.zeros((steps + 1, mesh.n_elements, k))
    v_hist = np.zeros((steps + 1, mesh.n_elements, 2, 2))
    phi_hist = np.zeros((steps + 1, mesh.n_vertices, 2))
    iters, residuals = [], []

    xi_values = xi_path.at(time_grid)
    phi = np.zeros(space.n_packed)
    p = np.zeros((mesh.n_elements, k))
    f_ext = np.zeros(space.n_packed)
    for m in range(1, steps + 1):
        dt = time_grid[m] - time_grid[m - 1]
        z, p, n_it, res = newton_solve(
            space, mats, xi_values[m][None, :], p, phi, dt, delta, rule_kind,
            f_ext, newton_rtol, 50, cg_rtol, periodic=True, step=m,
        )
        nodal = space.unpack_field(phi)
        p_hist[m] = p
        z_hist[m] = z
        v_hist[m] = space.element_gradients(nodal)
        phi_hist[m] = nodal
        iters.append(n_it)
        residuals.append(res)

    return CellTrajectory(times=time_grid, p=p_hist, z=z_hist, v=v_hist,
                          phi=phi_hist, newton_iters=iters,
                          residual_norms=residuals, space=space, mats=mats)


def _one_sample(cfg, xi_path, time_grid, space, j):
    medium = PeriodizedMedium(cfg.law, cfg.sample_seed(j), cfg.n_cells)
    traj = solve_cell(medium, xi_path, cfg.delta, time_grid, space=space,
                      rule_kind=cfg.rule_kind, newton_rtol=cfg.newton_rtol,
                      cg_rtol=cfg.cg_rtol)
    return traj.volume_average_z(), traj.volume_average_p()


def sigma(cfg, xi_path, time_grid, threads=1):
    """Monte-Carlo estimate of the effective operators along a strain path.

    Deterministic given the base seed: sample seeds are consecutive and the
    reduction runs in fixed seed order regardless of the thread count.
    """
    if cfg.law is None:
        raise ConfigurationError("RveConfig.law must be set")
    time_grid = np.asarray(time_grid, dtype=float)
    space = build_rve_space(cfg)  # immutable after construction, shareable
    jobs = range(cfg.n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda j: _one_sample(cfg, xi_path, time_grid, space, j), jobs))
    else:
        results = [_one_sample(cfg, xi_path, time_grid, space, j) for j in jobs]

    z_samples = np.stack([r[0] for r in results])   # (M, steps+1, k)
    p_samples = np.stack([r[1] for r in results])
    mean_z = z_samples.mean(axis=0)
    mean_p = p_samples.mean(axis=0)
    if cfg.n_samples > 1:
        stderr = z_samples.std(axis=0, ddof=1) / np.sqrt(cfg.n_samples)
    else:
        stderr = np.zeros_like(mean_z)
    return SigmaResult(
        times=time_grid, sigma=mean_z, pi=mean_p, mc_stderr=stderr,
        per_sample_sigma=z_samples, per_sample_pi=p_samples,
        config={"N": cfg.n_cells, "r": cfg.refine, "M": cfg.n_samples,
                "delta": cfg.delta, "base_seed": cfg.base_seed,
                "rule": cfg.rule_kind},
    )


def causality_check(cfg, xi1, xi2, t_star, time_grid):
    """Max deviation of the effective stress on [0, t_star] for two paths.

    Paths that agree on all knots up to t_star must give bitwise-equal
    results there, since the time stepping never looks ahead.
    """
    time_grid = np.asarray(time_grid, dtype=float)
    res1 = sigma(cfg, xi1, time_grid)
    res2 = sigma(cfg, xi2, time_grid)
    mask = time_grid <= t_star + 1e-15
    return float(np.abs(res1.sigma[mask] - res2.sigma[mask]).max())


def default_probe_direction(dim=2):
    """A fixed unit-norm pure-shear direction for continuity probes."""
    mat = np.zeros((dim, dim))
    mat[0, 1] = mat[1, 0] = 1.0
    comps = pack(mat)
    return comps / np.linalg.norm(comps)


def continuity_probe(cfg, xi_path, eta, time_grid, zeta=None):
    """Response deviation ||Sigma(xi + eta*zeta) - Sigma(xi)|| in L2(0,T).

    ``zeta`` defaults to a unit-norm shear ramp; the returned deviation
    divided by eta is the empirical sensitivity of the operator.
    """
    if eta == 0.0:
        return 0.0
    time_grid = np.asarray(time_grid, dtype=float)
    if zeta is None:
        direction = default_probe_direction()
        zeta = StrainPath(xi_path.knots,
                          np.outer(xi_path.knots / xi_path.knots[-1], direction))
    perturbed = StrainPath(xi_path.knots, xi_path.values + eta * zeta.values)
    base = sigma(cfg, xi_path, time_grid)
    moved = sigma(cfg, perturbed, time_grid)
    diff = moved.sigma - base.sigma
    dt = np.diff(time_grid)
    sq = np.sum(diff**2, axis=1)
    return float(np.sqrt(np.sum(dt * 0.5 * (sq[1:] + sq[:-1]))))
