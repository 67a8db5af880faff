"""Regular box grids, extended-real grid functions, norms, and shells.

Values are plain float64 arrays where ``+inf`` is the out-of-domain
sentinel. ``-inf`` and ``nan`` are never stored; constructors reject them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyDomainError

INF = float("inf")


class NormChoice(enum.Enum):
    """Primal norm; the dual pairing is l2<->l2, l1<->linf, linf<->l1."""

    L2 = "l2"
    L1 = "l1"
    LINF = "linf"

    @property
    def dual(self) -> "NormChoice":
        return {NormChoice.L2: NormChoice.L2,
                NormChoice.L1: NormChoice.LINF,
                NormChoice.LINF: NormChoice.L1}[self]

    def length(self, offsets: np.ndarray) -> np.ndarray:
        """Norms of row vectors; ``offsets`` has shape (..., dim)."""
        a = np.asarray(offsets, dtype=float)
        if self is NormChoice.L2:
            return np.sqrt((a * a).sum(axis=-1))
        if self is NormChoice.L1:
            return np.abs(a).sum(axis=-1)
        return np.abs(a).max(axis=-1)


@dataclass(frozen=True)
class Grid:
    """Regular tensor grid on a box; coordinates are exactly lb + k*h."""

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bounds",
                           tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        if len(self.bounds) != len(self.counts) or not self.bounds:
            raise ValueError("bounds and counts must be nonempty and same length")
        for (lo, hi), n in zip(self.bounds, self.counts):
            if not lo < hi:
                raise ValueError(f"need lb < ub per axis, got [{lo}, {hi}]")
            if n < 2:
                raise ValueError(f"need at least 2 points per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1)
                     for (lo, hi), n in zip(self.bounds, self.counts))

    @property
    def max_spacing(self) -> float:
        return max(self.spacing)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for (lo, _), n, h in zip(self.bounds, self.counts, self.spacing):
            ax = lo + np.arange(n) * h
            ax.flags.writeable = False
            out.append(ax)
        return tuple(out)

    @cached_property
    def points(self) -> np.ndarray:
        """All grid points, row-major, shape (size, dim)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        pts.flags.writeable = False
        return pts

    @cached_property
    def interior_flat(self) -> np.ndarray:
        """Boolean per flat index: no axis index touches the grid edge."""
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            mask[tuple(sl)] = False
            sl[ax] = -1
            mask[tuple(sl)] = False
        flat = mask.ravel()
        flat.flags.writeable = False
        return flat

    def ravel_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(i) for i in multi), self.shape))

    def unravel_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.shape))

    def point(self, flat: int) -> np.ndarray:
        return self.points[int(flat)]

    def is_interior(self, flat: int) -> bool:
        return bool(self.interior_flat[int(flat)])

    def index_of_nearest(self, point: Sequence[float]) -> int:
        """Flat index of the grid point closest to ``point`` (per-axis rounding)."""
        multi = []
        for c, (lo, _), h, n in zip(point, self.bounds, self.spacing, self.counts):
            k = int(round((float(c) - lo) / h))
            multi.append(min(max(k, 0), n - 1))
        return self.ravel_index(multi)

    def neighbors(self, flat: int) -> list[int]:
        """Flat indices one step away along each axis."""
        multi = self.unravel_index(flat)
        out = []
        for ax in range(self.dim):
            for step in (-1, 1):
                k = multi[ax] + step
                if 0 <= k < self.counts[ax]:
                    m = list(multi)
                    m[ax] = k
                    out.append(self.ravel_index(m))
        return out

    @property
    def corner_extent(self) -> float:
        """Half-diagonal style bound: largest axis extent."""
        return max(hi - lo for lo, hi in self.bounds)

    def cell_diagonal(self, norm: NormChoice = NormChoice.L2) -> float:
        return float(norm.length(np.array(self.spacing)))


def grid_1d(lo: float, hi: float, n: int) -> Grid:
    return Grid(bounds=((lo, hi),), counts=(n,))


def grid_2d(lo: float, hi: float, n: int,
            lo2: float | None = None, hi2: float | None = None,
            n2: int | None = None) -> Grid:
    lo2 = lo if lo2 is None else lo2
    hi2 = hi if hi2 is None else hi2
    n2 = n if n2 is None else n2
    return Grid(bounds=((lo, hi), (lo2, hi2)), counts=(n, n2))


def _validate_values(values: np.ndarray) -> None:
    if np.isnan(values).any():
        raise ValueError("nan is not a legal grid value")
    if np.isneginf(values).any():
        raise ValueError("-inf is not a legal grid value")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real values sampled on a grid; +inf marks points outside dom f."""

    grid: Grid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError("values shape does not match grid")
        _validate_values(vals)
        if not np.isfinite(vals).any():
            raise EmptyDomainError(f"function {self.name!r} is +inf everywhere")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @cached_property
    def domain_flat(self) -> np.ndarray:
        m = np.isfinite(self.flat)
        m.flags.writeable = False
        return m

    def value_at(self, flat: int) -> float:
        return float(self.flat[int(flat)])

    def lipschitz_hat(self) -> float:
        """Largest finite-difference slope between adjacent domain points."""
        best = 0.0
        for ax in range(self.grid.dim):
            with np.errstate(invalid="ignore"):
                d = np.diff(self.values, axis=ax)
            ok = np.isfinite(d)
            if ok.any():
                best = max(best, float(np.abs(d[ok]).max()) / self.grid.spacing[ax])
        return best

    def local_slope(self, flat: int) -> float:
        """Largest one-step slope magnitude at a point, over in-domain neighbors."""
        fx = self.value_at(flat)
        if not np.isfinite(fx):
            return 0.0
        best = 0.0
        x = self.grid.point(flat)
        for nb in self.grid.neighbors(flat):
            fn = self.value_at(nb)
            if np.isfinite(fn):
                step = float(NormChoice.LINF.length(self.grid.point(nb) - x))
                best = max(best, abs(fn - fx) / step)
        return best

    def tilted(self, s: Sequence[float]) -> np.ndarray:
        """Flat array of f(x) - <x, s>."""
        s = np.asarray(s, dtype=float)
        return self.flat - self.grid.points @ s

    def with_mask(self, keep_flat: np.ndarray, name: str | None = None) -> "GridFunction":
        """Restriction: +inf outside ``keep_flat`` (the indicator sum f + i_S)."""
        vals = self.flat.copy()
        vals[~np.asarray(keep_flat, dtype=bool)] = INF
        return GridFunction(self.grid, vals.reshape(self.grid.shape),
                            name=name if name is not None else self.name + "+indicator")


def build_grid_function(grid: Grid, evaluator: Callable, name: str = "",
                        vectorized: bool = False) -> GridFunction:
    """Sample ``evaluator`` at every grid point.

    The evaluator receives a point (1D: float, 2D: ndarray) and returns a
    float or +inf; with ``vectorized=True`` it receives the full (N, dim)
    point array and returns N values. Raises EmptyDomainError when no value
    is finite, ValueError on nan or -inf.
    """
    pts = grid.points
    if vectorized:
        vals = np.asarray(evaluator(pts), dtype=float).reshape(grid.size)
    else:
        if grid.dim == 1:
            vals = np.array([float(evaluator(float(p[0]))) for p in pts])
        else:
            vals = np.array([float(evaluator(p)) for p in pts])
    _validate_values(vals)
    return GridFunction(grid, vals.reshape(grid.shape), name=name)


@dataclass(frozen=True, eq=False)
class Shell:
    """Grid points whose distance to the center falls in [t - w, t + w]."""

    grid: Grid
    center: int
    radius: float
    half_width: float
    norm: NormChoice
    members: np.ndarray  # sorted flat indices, center excluded

    @property
    def empty(self) -> bool:
        return self.members.size == 0


def distances_from(grid: Grid, center: int, norm: NormChoice = NormChoice.L2) -> np.ndarray:
    return norm.length(grid.points - grid.point(center))


def shell(grid: Grid, center: int, radius: float,
          norm: NormChoice = NormChoice.L2,
          half_width: float | None = None) -> Shell:
    """Discrete stand-in for the sphere of radius ``radius`` about a point.

    The default band half-width is half the largest axis spacing, which
    makes shells at consecutive multiples of that spacing partition the
    grid. An empty shell is a reported state, not an error.
    """
    if radius <= 0:
        raise ValueError("shell radius must be positive")
    w = grid.max_spacing / 2.0 if half_width is None else float(half_width)
    d = distances_from(grid, center, norm)
    sel = (np.abs(d - radius) <= w) & (d > 0)
    return Shell(grid, int(center), float(radius), w, norm,
                 members=np.flatnonzero(sel))


def shell_ladder(grid: Grid, center: int,
                 norm: NormChoice = NormChoice.L2,
                 step: float | None = None,
                 max_radius: float | None = None) -> list[Shell]:
    """Disjoint shells at radii step, 2*step, ... covering the whole grid.

    Every grid point other than the center lands in exactly one band (the
    nearest multiple of ``step``).
    """
    step = grid.max_spacing if step is None else float(step)
    d = distances_from(grid, center, norm)
    if max_radius is None:
        max_radius = float(d.max())
    kmax = max(int(np.floor(max_radius / step + 0.5)), 1)
    band = np.floor(d / step + 0.5).astype(int)
    order = np.argsort(band, kind="stable")
    bands_sorted = band[order]
    shells = []
    lo = np.searchsorted(bands_sorted, 1, side="left")
    for k in range(1, kmax + 1):
        hi = np.searchsorted(bands_sorted, k, side="right")
        members = np.sort(order[lo:hi])
        members = members[members != center]
        shells.append(Shell(grid, int(center), k * step, step / 2.0, norm, members))
        lo = hi
    return shells
