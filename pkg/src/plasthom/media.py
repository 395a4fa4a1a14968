"""Seeded random checkerboard media and ergodic-averaging diagnostics.

A medium is an i.i.d. field of material parameters on the unit-cube lattice,
translated by a uniform random shift so that the ensemble is stationary
under all spatial shifts, not only integer ones.  Cell values are pure
functions of (seed, cell index): they are produced by a counter-based
integer hash, so the field is defined on all of R^d with O(1) memory and
re-evaluation is bit-identical.

Scaled coefficient fields are realized by reading the medium at x/eps.
Shifting a realization by y yields the realization of the translated medium,
and composing shifts adds displacements.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .tensors import MaterialPoint, isotropic_eigenvalues

# SplitMix64 constants; salts are premultiplied as an array so every uint64
# product happens in array arithmetic (silent wrap mod 2^64)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SALTS = np.arange(1, 64, dtype=np.uint64) * _GOLDEN

# hash channels for the per-cell parameter draws and the global shift
_CHANNELS = {"E": 0, "nu": 1, "sigma_y": 2, "H": 3}
_SHIFT_CHANNEL = 16


def _mix(x):
    """SplitMix64 finalizer on uint64 arrays (wraps mod 2^64)."""
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _uniform01(seed, cells, channel):
    """Uniform [0,1) draws, one per row of the integer array ``cells``.

    Pure in (seed, cell, channel); distinct channels give independent draws.
    Arithmetic runs on uint64 arrays, wrapping mod 2^64 by construction.
    """
    cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
    start = np.array([np.int64(seed)], dtype=np.int64).astype(np.uint64)
    start += _SALTS[channel]
    h = np.broadcast_to(_mix(start), (cells.shape[0],)).copy()
    for axis in range(cells.shape[1]):
        key = cells[:, axis].astype(np.uint64)
        key = key + _SALTS[axis + 1]
        h = _mix(h ^ key)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_shifts(seeds, dim):
    """The uniform [0,1)^d shift attached to each seed, vectorized."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.int64))
    out = np.empty((seeds.size, dim))
    for axis in range(dim):
        out[:, axis] = _uniform01(0, seeds[:, None], _SHIFT_CHANNEL + axis)
    return out


@dataclass(frozen=True)
class Distribution:
    """A scalar distribution: point mass, uniform interval, or finite discrete."""

    kind: str  # "point" | "uniform" | "discrete"
    params: tuple

    @classmethod
    def point(cls, value):
        return cls("point", (float(value),))

    @classmethod
    def uniform(cls, lo, hi):
        if not hi > lo:
            raise ConfigurationError(f"uniform interval needs hi > lo, got [{lo}, {hi}]")
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def discrete(cls, values, weights=None):
        values = [float(v) for v in values]
        if not values:
            raise ConfigurationError("discrete distribution with empty support")
        if weights is None:
            weights = [1.0] * len(values)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(values),) or np.any(weights < 0) or weights.sum() <= 0:
            raise ConfigurationError("discrete weights must be nonnegative with positive sum")
        return cls("discrete", (tuple(values), tuple(weights / weights.sum())))

    @classmethod
    def from_config(cls, spec):
        """Parse ``{"point": v}``, ``{"uniform": [lo, hi]}`` or
        ``{"discrete": {"values": [...], "weights": [...]}}``."""
        if isinstance(spec, (int, float)):
            return cls.point(spec)
        if not isinstance(spec, dict) or len(spec) != 1:
            raise ConfigurationError(f"bad distribution spec {spec!r}")
        (key, val), = spec.items()
        if key == "point":
            return cls.point(val)
        if key == "uniform":
            return cls.uniform(*val)
        if key == "discrete":
            return cls.discrete(val["values"], val.get("weights"))
        raise ConfigurationError(f"unknown distribution kind {key!r}")

    def sample(self, u):
        """Map uniform [0,1) draws to values (inverse transform)."""
        u = np.asarray(u)
        if self.kind == "point":
            return np.full_like(u, self.params[0], dtype=float)
        if self.kind == "uniform":
            lo, hi = self.params
            return lo + (hi - lo) * u
        values, weights = self.params
        edges = np.cumsum(weights)
        idx = np.searchsorted(edges, u, side="right")
        return np.asarray(values, dtype=float)[np.minimum(idx, len(values) - 1)]

    def support_extremes(self):
        if self.kind == "point":
            return [self.params[0]]
        if self.kind == "uniform":
            return list(self.params)
        return [min(self.params[0]), max(self.params[0])]

    def mean(self):
        if self.kind == "point":
            return self.params[0]
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        values, weights = self.params
        return float(np.dot(values, weights))

    @property
    def is_point(self):
        return self.kind == "point"


@dataclass(frozen=True)
class ProbabilityLaw:
    """Independent per-cell distributions for (E, nu, sigma_y, H).

    Construction validates that every extremal parameter combination yields
    positive-definite, bounded compliance and hardening, so any realization
    satisfies a uniform two-sided ellipticity bound.  The bound constants
    are exposed as ``gamma`` (compliance) and ``beta`` (hardening).
    """

    E: Distribution
    nu: Distribution
    sigma_y: Distribution
    hardening: Distribution = field(default_factory=lambda: Distribution.point(1.0))
    dim: int = 2

    def __post_init__(self):
        for E in self.E.support_extremes():
            if E <= 0:
                raise ConfigurationError(f"law admits non-positive Young modulus {E}")
            for nu in self.nu.support_extremes():
                if not -1.0 < nu < 0.5:
                    raise ConfigurationError(f"law admits Poisson ratio {nu} outside (-1, 1/2)")
                isotropic_eigenvalues(E, nu, self.dim)
        for sy in self.sigma_y.support_extremes():
            if sy <= 0:
                raise ConfigurationError(f"law admits non-positive yield stress {sy}")
        for h in self.hardening.support_extremes():
            if h <= 0:
                raise ConfigurationError(f"law admits non-positive hardening modulus {h}")

    @classmethod
    def from_config(cls, cfg, dim=2):
        """Build from JSON-style keys ``E``, ``nu``, ``sigma_y`` and optional ``H``."""
        try:
            return cls(
                E=Distribution.from_config(cfg["E"]),
                nu=Distribution.from_config(cfg["nu"]),
                sigma_y=Distribution.from_config(cfg["sigma_y"]),
                hardening=Distribution.from_config(cfg.get("H", 1.0)),
                dim=dim,
            )
        except KeyError as missing:
            raise ConfigurationError(f"law config misses key {missing}") from None

    @classmethod
    def constant(cls, E, nu, sigma_y, hardening=1.0, dim=2):
        """Point-mass law: a homogeneous medium."""
        return cls(
            Distribution.point(E),
            Distribution.point(nu),
            Distribution.point(sigma_y),
            Distribution.point(hardening),
            dim=dim,
        )

    @property
    def gamma(self):
        """Two-sided ellipticity constant of the compliance over the law support."""
        bound = np.inf
        for E in self.E.support_extremes():
            for nu in self.nu.support_extremes():
                a_vol, a_dev = isotropic_eigenvalues(E, nu, self.dim)
                for a in (a_vol, a_dev):
                    bound = min(bound, a, 1.0 / a)
        return bound

    @property
    def beta(self):
        bound = np.inf
        for h in self.hardening.support_extremes():
            bound = min(bound, h, 1.0 / h)
        return bound

    def cell_parameters(self, seed, cells):
        """Parameter arrays for integer cells (n, d): dict with E, nu, sigma_y, H."""
        cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
        out = {}
        for name, dist in (("E", self.E), ("nu", self.nu),
                           ("sigma_y", self.sigma_y), ("H", self.hardening)):
            if dist.is_point:
                out[name] = np.full(cells.shape[0], dist.params[0])
            else:
                out[name] = dist.sample(_uniform01(seed, cells, _CHANNELS[name]))
        return out


@dataclass(frozen=True)
class Realization:
    """One sampled medium: a shifted checkerboard, cell values keyed by seed.

    ``shift`` is the uniform [0,1)^d translation drawn from the seed;
    ``translation`` accumulates explicit shifts applied afterwards.  The
    material at x on scale eps is the cell value at floor(x/eps + translation
    - shift).
    """

    law: ProbabilityLaw
    seed: int
    shift: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        for name in ("shift", "translation"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (self.law.dim,):
                raise ConfigurationError(f"{name} must have shape ({self.law.dim},)")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def dim(self):
        return self.law.dim

    def _cells_at(self, points, eps):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        offset = self.translation - self.shift
        return np.floor(points / eps + offset).astype(np.int64)

    def parameters_at(self, points, eps=1.0):
        """Raw parameter arrays of the cells containing the given points."""
        if not eps > 0:
            raise ConfigurationError(f"scale eps must be positive, got {eps}")
        return self.law.cell_parameters(self.seed, self._cells_at(points, eps))


def sample_realization(law, seed, zero_shift=False):
    """Draw the realization attached to ``seed``: deterministic, bit-stable.

    With ``zero_shift`` the uniform translation is suppressed and the cells
    stay lattice-aligned; statistics on large boxes are unchanged, but meshes
    aligned with the lattice then resolve the medium exactly.
    """
    shift = np.zeros(law.dim) if zero_shift else sample_shifts([seed], law.dim)[0]
    return Realization(law=law, seed=int(seed), shift=shift,
                       translation=np.zeros(law.dim))


def shifted(omega, y):
    """The translated realization; composing shifts adds displacements."""
    y = np.asarray(y, dtype=float)
    return replace(omega, translation=omega.translation + y)


_material_cache = {}


def _material_point(E, nu, sigma_y, H, dim):
    key = (round(float(E), 14), round(float(nu), 14),
           round(float(sigma_y), 14), round(float(H), 14), dim)
    mp = _material_cache.get(key)
    if mp is None:
        mp = MaterialPoint.from_parameters(E, nu, sigma_y, H, dim=dim)
        if len(_material_cache) < 4096:
            _material_cache[key] = mp
    return mp


def evaluate(omega, x, eps=1.0):
    """MaterialPoint of the checkerboard cell containing x at scale eps."""
    params = omega.parameters_at(np.asarray(x, dtype=float)[None, :], eps)
    return _material_point(params["E"][0], params["nu"][0],
                           params["sigma_y"][0], params["H"][0], omega.dim)


def ergodic_average(omega, g, L):
    """Exact volume average of g(material) over the box [-L, L]^d at scale 1.

    The field is piecewise constant on shifted unit cells, so the integral
    is a finite sum over cells weighted by the overlap volume with the box
    (cut cells included exactly).
    """
    if L < 1:
        raise ConfigurationError(f"box half-width must be >= 1, got {L}")
    d = omega.dim
    offset = omega.translation - omega.shift
    axes = []
    for i in range(d):
        lo, hi = -L + offset[i], L + offset[i]
        cells = np.arange(int(np.floor(lo)), int(np.floor(hi)) + 1)
        weights = np.minimum(cells + 1.0, hi) - np.maximum(cells.astype(float), lo)
        keep = weights > 0
        axes.append((cells[keep], weights[keep]))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    cells = np.stack([grid.ravel() for grid in grids], axis=-1)
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    params = omega.law.cell_parameters(omega.seed, cells)
    values = np.array([
        g(_material_point(params["E"][i], params["nu"][i],
                          params["sigma_y"][i], params["H"][i], d))
        for i in range(cells.shape[0])
    ])
    return float(np.dot(weights, values) / (2.0 * L) ** d)


@dataclass(frozen=True)
class PeriodizedMedium:
    """An N^d block of i.i.d. cells wrapped periodically: the RVE medium.

    This is the computable surrogate for the abstract stationary medium used
    by the cell problems; it converges to it as the block size and the
    Monte-Carlo sample count grow.
    """

    law: ProbabilityLaw
    seed: int
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1:
            raise ConfigurationError(f"RVE needs at least one cell, got {self.n_cells}")

    @property
    def dim(self):
        return self.law.dim

    def parameters_at(self, points, eps=1.0):
        cells = np.floor(np.atleast_2d(np.asarray(points, dtype=float)) / eps)
        cells = np.mod(cells.astype(np.int64), self.n_cells)
        return self.law.cell_parameters(self.seed, cells)
