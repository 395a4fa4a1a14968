"""Strain paths and boundary loading programs.

A StrainPath is a time-discretized symmetric-tensor evolution with vanishing
initial value, interpolated piecewise linearly between its knots.  Affine
Dirichlet programs U(t, x) = xi(t) x + a(t) are represented structurally so
that solvers can exploit that the additive constant a never influences
strains: it is stripped before solving and added back to displacements,
which makes stress outputs bitwise independent of a.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .tensors import SQRT2, mandel_dim


@dataclass(frozen=True)
class StrainPath:
    """Piecewise-linear tensor path with value zero at time zero."""

    knots: np.ndarray      # (m,)
    values: np.ndarray     # (m, k) Mandel components
    dim: int = 2

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        values = np.array(self.values, dtype=float)
        if knots.ndim != 1 or np.any(np.diff(knots) <= 0):
            raise ConfigurationError("knots must be strictly increasing")
        k = mandel_dim(self.dim)
        if values.shape != (knots.size, k):
            raise ConfigurationError(
                f"values must have shape ({knots.size}, {k}), got {values.shape}"
            )
        if knots[0] != 0.0 or np.any(values[0] != 0.0):
            raise ConfigurationError("strain paths must start at t=0 with value 0")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ConfigurationError("strain paths must be finite")
        knots.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def ramp(cls, target, T, steps=1, dim=2):
        """Linear ramp from zero to ``target`` (Mandel components) over [0, T]."""
        target = np.asarray(target, dtype=float)
        times = np.linspace(0.0, T, steps + 1)
        return cls(times, np.outer(times / T, target), dim=dim)

    @classmethod
    def from_knots(cls, times, tensors, dim=2):
        return cls(np.asarray(times, dtype=float), np.asarray(tensors, dtype=float), dim=dim)

    def at(self, t):
        """Linear interpolation; clamped to the end values outside the knots."""
        t = np.asarray(t, dtype=float)
        out = np.stack(
            [np.interp(t, self.knots, self.values[:, c])
             for c in range(self.values.shape[1])],
            axis=-1,
        )
        return out

    def h1_norm(self):
        """Discrete H1(0,T) norm: L2 of values plus L2 of difference quotients."""
        dt = np.diff(self.knots)
        mid_sq = 0.5 * (np.sum(self.values[1:] ** 2, axis=1)
                        + np.sum(self.values[:-1] ** 2, axis=1))
        rate_sq = np.sum(np.diff(self.values, axis=0) ** 2, axis=1) / dt**2
        return float(np.sqrt(np.sum(dt * (mid_sq + rate_sq))))

    def restricted(self, t_star):
        """The path truncated to knots <= t_star."""
        keep = self.knots <= t_star + 1e-15
        return StrainPath(self.knots[keep], self.values[keep], dim=self.dim)


def path_from_csv(path, dim=2):
    """Read a strain path from CSV columns t, xi_11, xi_22, xi_12 (tensor entries).

    Off-diagonal columns hold the physical tensor entries; the Mandel sqrt(2)
    scaling is applied on read.
    """
    times, rows = [], []
    with open(path, newline="", encoding="utf8") as fh:
        for record in csv.DictReader(fh):
            times.append(float(record["t"]))
            if dim == 2:
                rows.append([float(record["xi_11"]), float(record["xi_22"]),
                             SQRT2 * float(record["xi_12"])])
            else:
                rows.append([float(record["xi_11"]), float(record["xi_22"]),
                             float(record["xi_33"]), SQRT2 * float(record["xi_23"]),
                             SQRT2 * float(record["xi_13"]), SQRT2 * float(record["xi_12"])])
    return StrainPath(np.asarray(times), np.asarray(rows), dim=dim)


@dataclass(frozen=True)
class AffineBoundary:
    """Dirichlet program U(t, x) = xi(t) x + a(t).

    ``offset`` is an optional callable t -> (d,) additive constant with
    offset(0) = 0; it shifts displacements but never strains or stresses.
    """

    path: StrainPath
    offset: object = None

    def __post_init__(self):
        if self.offset is not None:
            a0 = np.asarray(self.offset(0.0), dtype=float)
            if np.linalg.norm(a0) > 1e-14:
                raise ConfigurationError("additive boundary constant must vanish at t=0")

    def strain_at(self, t):
        return self.path.at(t)

    def offset_at(self, t):
        if self.offset is None:
            return np.zeros(self.path.dim)
        return np.asarray(self.offset(t), dtype=float)

    def __call__(self, t, points):
        from .tensors import unpack

        xi = unpack(self.path.at(t), self.path.dim)
        return np.asarray(points) @ xi.T + self.offset_at(t)


def tabulated_offset(rows):
    """Piecewise-linear offset t -> a(t) from rows [t, a_1, a_2]."""
    rows = np.asarray(rows, dtype=float)
    times, vals = rows[:, 0], rows[:, 1:]

    def offset(t):
        return np.stack([np.interp(t, times, vals[:, c]) for c in range(vals.shape[1])],
                        axis=-1)

    return offset
