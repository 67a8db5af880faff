"""Discrete Legendre-Fenchel conjugation on a dual grid.

Two routes compute ``f*(s) = max_x (<x, s> - f(x))`` over the primal grid:

* ``conjugate_brute`` evaluates the maximum directly (the reference oracle);
* ``conjugate_fast`` runs the monotone-slope transform on the lower convex
  hull of each 1D slice, composing two passes in 2D with a sign flip in
  between. Values agree with brute force to floating-point reassociation.

A dual point is *trusted* when some maximizer lies strictly inside the
primal grid; untrusted values are boundary-clamped truncation artifacts and
are excluded from downstream diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grids import Grid, GridFunction
from .tolerances import DEFAULT_TOLS, Tolerances

_BRUTE_CHUNK = 256


@dataclass(frozen=True, eq=False)
class ConjugateResult:
    """Conjugate values on the dual grid plus maximizer bookkeeping."""

    dual: GridFunction
    trusted: np.ndarray   # bool per dual flat index
    argmax: np.ndarray    # primal flat index per dual flat index
    primal_grid: Grid
    method: str = "fast"

    @property
    def dual_grid(self) -> Grid:
        return self.dual.grid

    def trusted_interior(self) -> np.ndarray:
        """Trusted dual points whose dual-grid neighbors are all trusted."""
        g = self.dual_grid
        shaped = self.trusted.reshape(g.shape)
        out = shaped & g.interior_flat.reshape(g.shape)
        for ax in range(g.dim):
            lo = np.ones(g.shape, dtype=bool)
            hi = np.ones(g.shape, dtype=bool)
            sl_lo = [slice(None)] * g.dim
            sl_hi = [slice(None)] * g.dim
            sl_lo[ax] = slice(1, None)
            sl_hi[ax] = slice(None, -1)
            lo[tuple(sl_lo)] = np.take(shaped, range(0, g.shape[ax] - 1), axis=ax)
            hi[tuple(sl_hi)] = np.take(shaped, range(1, g.shape[ax]), axis=ax)
            out &= lo & hi
        return out.ravel()


def conjugate_value(f: GridFunction, s: Sequence[float]) -> tuple[float, int]:
    """Conjugate at a single dual point: (value, primal argmax flat index)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vals = f.grid.points @ s - f.flat
    arg = int(np.argmax(vals))
    return float(vals[arg]), arg


def conjugate_brute(f: GridFunction, dual_grid: Grid) -> ConjugateResult:
    """Direct maximum over all primal points, chunked over dual points."""
    pts = f.grid.points
    fv = f.flat
    interior = f.grid.interior_flat
    duals = dual_grid.points
    m = dual_grid.size
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    trusted = np.empty(m, dtype=bool)
    for lo in range(0, m, _BRUTE_CHUNK):
        hi = min(lo + _BRUTE_CHUNK, m)
        vals = duals[lo:hi] @ pts.T - fv[None, :]
        best = vals.max(axis=1)
        out[lo:hi] = best
        arg[lo:hi] = vals.argmax(axis=1)
        ties = vals >= best[:, None]
        trusted[lo:hi] = (ties & interior[None, :]).any(axis=1)
    dual_fn = GridFunction(dual_grid, out.reshape(dual_grid.shape),
                           name=f.name + "*")
    return ConjugateResult(dual_fn, trusted, arg, f.grid, method="brute")


def _lower_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the strict lower convex hull of points sorted by x."""
    stack: list[int] = []
    for i in range(len(x)):
        while len(stack) >= 2:
            a, b = stack[-2], stack[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0.0:
                stack.pop()
            else:
                break
        stack.append(i)
    return stack


def _conj_1d(xs: np.ndarray, fv: np.ndarray, ss: np.ndarray
             ) -> tuple[np.ndarray, np.ndarray]:
    """One monotone-slope pass; returns (values, argmax index into xs).

    Out-of-domain (non-finite) entries are skipped; with an empty domain the
    values are -inf and the argmax is -1.
    """
    finite = np.isfinite(fv)
    if not finite.any():
        return (np.full(ss.shape, -np.inf), np.full(ss.shape, -1, dtype=np.int64))
    orig = np.flatnonzero(finite)
    xf = xs[orig]
    yf = fv[orig]
    hull = _lower_hull(xf, yf)
    ho = orig[np.asarray(hull, dtype=np.int64)]
    if len(hull) == 1:
        arg = np.full(ss.shape, ho[0], dtype=np.int64)
    else:
        hx = xs[ho]
        hy = fv[ho]
        slopes = (hy[1:] - hy[:-1]) / (hx[1:] - hx[:-1])
        j = np.searchsorted(slopes, ss, side="left")
        arg = ho[j]
    return ss * xs[arg] - fv[arg], arg


def conjugate_fast(f: GridFunction, dual_grid: Grid) -> ConjugateResult:
    """Hull-based transform; matches conjugate_brute to ~1e-12 relative.

    Trust is decided by re-running each pass restricted to interior primal
    points: a dual point is trusted exactly when the interior maximum
    reaches the full maximum.
    """
    if f.grid.dim == 1:
        xs = f.grid.axes[0]
        ss = dual_grid.axes[0]
        vals, arg = _conj_1d(xs, f.flat, ss)
        iv, _ = _conj_1d(xs[1:-1], f.flat[1:-1], ss)
        trusted = iv >= vals
        dual_fn = GridFunction(dual_grid, vals.reshape(dual_grid.shape),
                               name=f.name + "*")
        return ConjugateResult(dual_fn, trusted, arg, f.grid, method="fast")

    if f.grid.dim != 2:
        raise NotImplementedError("conjugate_fast supports dim 1 and 2")

    x1s, x2s = f.grid.axes
    s1s, s2s = dual_grid.axes
    n1 = f.grid.counts[0]
    m1, m2 = dual_grid.counts
    fvals = f.values

    # pass 1: partial conjugate in x2 per primal row, full and interior-x2
    g = np.empty((n1, m2))
    a2 = np.empty((n1, m2), dtype=np.int64)
    g_int = np.empty((n1, m2))
    a2_int = np.empty((n1, m2), dtype=np.int64)
    for i in range(n1):
        g[i], a2[i] = _conj_1d(x2s, fvals[i], s2s)
        vi, ai = _conj_1d(x2s[1:-1], fvals[i, 1:-1], s2s)
        g_int[i], a2_int[i] = vi, np.where(ai >= 0, ai + 1, -1)

    # pass 2: conjugate in x1 per dual column, with the sign flip
    out = np.empty((m1, m2))
    argmax = np.empty((m1, m2), dtype=np.int64)
    trusted = np.empty((m1, m2), dtype=bool)
    n2 = f.grid.counts[1]
    for j in range(m2):
        h = -g[:, j]
        vals, a1 = _conj_1d(x1s, h, s1s)
        out[:, j] = vals
        argmax[:, j] = a1 * n2 + a2[a1, j]
        h_int = -g_int[1:-1, j]
        iv, _ = _conj_1d(x1s[1:-1], h_int, s1s)
        trusted[:, j] = iv >= vals

    dual_fn = GridFunction(dual_grid, out.reshape(dual_grid.shape),
                           name=f.name + "*")
    return ConjugateResult(dual_fn, trusted.ravel(), argmax.ravel(),
                           f.grid, method="fast")


def conjugate(f: GridFunction, dual_grid: Grid, method: str = "fast") -> ConjugateResult:
    if method == "fast":
        return conjugate_fast(f, dual_grid)
    if method == "brute":
        return conjugate_brute(f, dual_grid)
    raise ValueError(f"unknown conjugation method {method!r}")


@dataclass(frozen=True, eq=False)
class BiconjugateResult:
    """f** on the primal grid with the convexity-consistency verdict."""

    function: GridFunction
    trusted: np.ndarray
    consistent: bool          # f** == f on trusted domain points, up to tol
    tol_bicon: float
    max_gap: float            # max |f** - f| over trusted domain points

    @property
    def convex_lsc_consistent(self) -> bool:
        return self.consistent


def bicon_tolerance(f: GridFunction, tols: Tolerances = DEFAULT_TOLS) -> float:
    """First-order conjugation error bound: 4 * h_max * Lipschitz estimate."""
    scale = float(np.abs(f.flat[f.domain_flat]).max(initial=0.0))
    floor = tols.eps_fp * (1.0 + scale)
    return max(tols.bicon_c * f.grid.max_spacing * f.lipschitz_hat(), floor)


def biconjugate(f: GridFunction, dual_grid: Grid,
                tols: Tolerances = DEFAULT_TOLS,
                method: str = "fast") -> BiconjugateResult:
    """Double conjugation f**; flags whether f was already convex lsc."""
    star = conjugate(f, dual_grid, method=method)
    second = conjugate(star.dual, f.grid, method=method)
    tol = bicon_tolerance(f, tols)
    compare = second.trusted & f.domain_flat
    if compare.any():
        max_gap = float(np.abs(second.dual.flat[compare] - f.flat[compare]).max())
    else:
        max_gap = 0.0
    fn = GridFunction(f.grid, second.dual.values, name=f.name + "**")
    return BiconjugateResult(fn, second.trusted, bool(max_gap <= tol), tol, max_gap)
