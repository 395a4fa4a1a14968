"""Effective macroscopic problem driven by per-element cell states (FE2).

The macroscopic displacement solves -div(Sigma(sym grad u)) = f weakly on a
P1 mesh, where Sigma is the effective hysteretic stress operator evaluated
through per-element cell problems: every macro element owns one persistent
cell state per Monte-Carlo sample.  Per time step, a macro Newton iteration
updates the nodal displacements; stress increments come from advancing the
element cell problems at the element strain, and the macro tangent is built
from one-sided finite differences of those increments.  Cell states are
snapshotted around tangent probes, so probes have no side effects, and each
element's state is committed exactly once per accepted step.
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError
from .fem import P1Space, mesh_torus, pcg
from .finescale import _boundary_values, _load_vector
from .loading import AffineBoundary
from .media import PeriodizedMedium
from .returnmap import MaterialArrays
from .tensors import mandel_dim


@dataclass
class MacroConfig:
    """Macroscopic problem data plus the per-element RVE budget."""

    mesh: object
    rve: object                   # RveConfig
    dirichlet: object             # AffineBoundary or callable U(t, pts)
    time_grid: np.ndarray
    load: object = None
    newton_rtol: float = 1e-6
    newton_maxiter: int = 40
    fd_rel: float = 1e-6
    fd_abs: float = 1e-10
    max_seconds: float = None
    max_elements: int = None

    def __post_init__(self):
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        if self.time_grid[0] != 0.0 or np.any(np.diff(self.time_grid) <= 0):
            raise ConfigurationError("time grid must start at 0 and increase strictly")
        if self.max_elements is not None and self.mesh.n_elements > self.max_elements:
            raise ConfigurationError(
                f"mesh has {self.mesh.n_elements} elements, budget allows {self.max_elements}"
            )


class ElementCellState:
    """Cell problems of one macro element: M samples sharing the RVE mesh.

    ``advance`` performs one implicit step from the committed state at a
    trial strain and returns the sample-averaged stress; ``commit`` makes the
    last advance permanent.  Probing never touches committed arrays.
    """

    def __init__(self, rve_cfg, rve_space):
        self.cfg = rve_cfg
        self.space = rve_space
        mesh = rve_space.mesh
        k = mandel_dim(2)
        self.mats = []
        for j in range(rve_cfg.n_samples):
            medium = PeriodizedMedium(rve_cfg.law, rve_cfg.sample_seed(j),
                                      rve_cfg.n_cells)
            mats = MaterialArrays.from_medium(medium, mesh.barycenters)
            mats.validate_elliptic()
            self.mats.append(mats)
        self.p = np.zeros((rve_cfg.n_samples, mesh.n_elements, k))
        self.phi = np.zeros((rve_cfg.n_samples, rve_space.n_packed))
        self._trial = None

    def advance(self, strain, dt):
        """One backward-Euler cell step per sample; returns the mean stress."""
        from .finescale import newton_solve

        cfg = self.cfg
        mesh = self.space.mesh
        w = mesh.volumes / mesh.volumes.sum()
        z_means = []
        trial_p, trial_phi = [], []
        f_ext = np.zeros(self.space.n_packed)
        for j in range(cfg.n_samples):
            phi = self.phi[j].copy()
            z, p_new, _, _ = newton_solve(
                self.space, self.mats[j], np.asarray(strain)[None, :],
                self.p[j], phi, dt, cfg.delta, cfg.rule_kind,
                f_ext, cfg.newton_rtol, 50, cfg.cg_rtol, periodic=True,
            )
            z_means.append(w @ z)
            trial_p.append(p_new)
            trial_phi.append(phi)
        self._trial = (trial_p, trial_phi)
        return np.mean(z_means, axis=0)

    def commit(self):
        trial_p, trial_phi = self._trial
        for j in range(self.cfg.n_samples):
            self.p[j] = trial_p[j]
            self.phi[j] = trial_phi[j]
        self._trial = None


@dataclass
class EffectiveSolution:
    """Displacements, per-element stress series and cell states, residuals."""

    times: np.ndarray
    u: np.ndarray              # (steps+1, nv, d)
    sigma: np.ndarray          # (steps+1, ne, k)
    residual_history: list
    newton_iters: list
    space: object = field(repr=False, default=None)
    cells: list = field(repr=False, default=None)  # final per-element states

    def average_stress(self):
        w = self.space.mesh.volumes
        return np.einsum("e,mek->mk", w, self.sigma) / w.sum()


def solve_effective(config):
    """Time-incremental FE2 solve of the effective plasticity problem.

    Raises NumericalError with partial results if the wall-clock budget is
    exceeded, and with element-wise residual diagnostics on Newton failure.
    """
    mesh = config.mesh
    space = P1Space(mesh)
    times = config.time_grid
    steps = times.size - 1
    k = mandel_dim(2)
    start = _time.monotonic()

    rve_space = P1Space(mesh_torus(config.rve.n_cells, config.rve.refine))
    cells = [ElementCellState(config.rve, rve_space) for _ in range(mesh.n_elements)]

    u_hist = np.zeros((steps + 1, mesh.n_vertices, 2))
    sig_hist = np.zeros((steps + 1, mesh.n_elements, k))
    residual_history, iter_history = [], []

    u = np.zeros(space.n_packed)
    free = space.free_dofs

    def element_sigmas(strains, dt):
        out = np.empty((mesh.n_elements, k))
        for e in range(mesh.n_elements):
            out[e] = cells[e].advance(strains[e], dt)
        return out

    for m in range(1, steps + 1):
        t, dt = times[m], times[m] - times[m - 1]
        bc_field = space.zero_field()
        idx = space.dirichlet_vertices
        bc_field[idx] = _boundary_values(config, t, mesh.vertices[idx])
        packed_bc = space.pack_field(bc_field)
        u[~space.free_mask] = packed_bc[~space.free_mask]
        f_ext = _load_vector(space, config, t)

        converged = False
        res_norm = np.inf
        for it in range(config.newton_maxiter):
            if config.max_seconds is not None \
                    and _time.monotonic() - start > config.max_seconds:
                raise NumericalError(
                    "wall-clock budget exceeded", step=m,
                    partial=_package(times, u_hist, sig_hist, residual_history,
                                     iter_history, space, upto=m - 1),
                )
            strains = space.element_strains(space.unpack_field(u))
            sig = element_sigmas(strains, dt)
            f_int = space.internal_forces(sig)
            residual = (f_ext - f_int)[free]
            res_norm = np.linalg.norm(residual)
            denom = max(np.linalg.norm(f_int[free]), np.linalg.norm(f_ext[free]),
                        1e-300)
            if res_norm <= config.newton_rtol * denom + 1e-14 * (1.0 + denom):
                for cell in cells:
                    cell.commit()
                sig_hist[m] = sig
                converged = True
                iter_history.append(it)
                residual_history.append(res_norm)
                break
            # finite-difference macro tangent, probes restored afterwards
            moduli = np.empty((mesh.n_elements, k, k))
            for e in range(mesh.n_elements):
                base = sig[e]
                h = config.fd_rel * np.linalg.norm(strains[e]) + config.fd_abs
                for comp in range(k):
                    probe = strains[e].copy()
                    probe[comp] += h
                    moduli[e][:, comp] = (cells[e].advance(probe, dt) - base) / h
            moduli = 0.5 * (moduli + np.swapaxes(moduli, 1, 2))
            A = space.assemble_operator(moduli)
            Aff = A[free][:, free]
            du, _ = pcg(Aff, residual, Aff.diagonal(), rtol=1e-12)
            u[free] += du
        if not converged:
            worst = np.argsort(np.abs(f_ext - f_int))[-5:]
            raise NumericalError(
                f"macro Newton did not converge (worst dofs {worst.tolist()})",
                step=m, residual=float(res_norm),
            )
        u_hist[m] = space.unpack_field(u)

    if isinstance(config.dirichlet, AffineBoundary) and config.dirichlet.offset is not None:
        for m in range(1, steps + 1):
            u_hist[m] = u_hist[m] + config.dirichlet.offset_at(times[m])
    return _package(times, u_hist, sig_hist, residual_history, iter_history,
                    space, cells=cells)


def _package(times, u_hist, sig_hist, residual_history, iter_history, space,
             upto=None, cells=None):
    if upto is not None:
        times = times[: upto + 1]
        u_hist, sig_hist = u_hist[: upto + 1], sig_hist[: upto + 1]
    return EffectiveSolution(times=times, u=u_hist, sigma=sig_hist,
                             residual_history=residual_history,
                             newton_iters=iter_history, space=space,
                             cells=cells)


def weak_form_residual(solution, config):
    """Max relative weak-form defect over every P1 basis function and step."""
    space = solution.space
    free = space.free_dofs
    worst = 0.0
    for m in range(1, solution.times.size):
        f_ext = _load_vector(space, config, solution.times[m])
        f_int = space.internal_forces(solution.sigma[m])
        denom = max(np.linalg.norm(f_int[free]), np.linalg.norm(f_ext[free]), 1e-300)
        worst = max(worst, np.abs((f_ext - f_int)[free]).max() / denom)
    return worst
