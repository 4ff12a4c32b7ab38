"""Instantaneous spectrum, minimum gap and adiabatic matrix element."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .hamiltonian import DENSE_MAX_DIM, SubspaceHamiltonian

DEGENERACY_TOL = 1e-10
GOLDEN = (math.sqrt(5) - 1) / 2


class DegeneracyWarning(RuntimeWarning):
    pass


@dataclass
class SpectrumPoint:
    s: float
    energies: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    converged: bool = True

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0])


@dataclass
class GapReport:
    g: float
    s_star: float
    E_script: float
    bound: float
    degenerate: bool = False
    degenerate_s: list[float] = field(default_factory=list)
    points: list[SpectrumPoint] = field(default_factory=list, repr=False)
    matrix_elements: list[float] = field(default_factory=list, repr=False)
    grid: list[float] = field(default_factory=list, repr=False)

    def rows(self, refined: bool = False):
        """s, energies..., gap, matrix element for each uniform-grid point.

        ``refined=True`` also includes the refinement points.
        """
        on_grid = set(self.grid)
        for p, me in zip(self.points, self.matrix_elements):
            if refined or p.s in on_grid:
                yield [p.s, *p.energies.tolist(), p.gap, me]

    def write_csv(self, path, header_comments: list[str] = ()) -> None:
        m = len(self.points[0].energies)
        with open(path, "w", newline="") as fh:
            for line in header_comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["s", *[f"E_{j}" for j in range(m)], "gap", "matrix_element"])
            for row in self.rows():
                writer.writerow([repr(float(x)) for x in row])


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(lead) / lead)[None, :]


def eigenpairs(
    matvec: Callable[[np.ndarray], np.ndarray],
    dense: Callable[[], np.ndarray] | None,
    dim: int,
    m: int,
    vectors: bool = True,
    force_iterative: bool = False,
    s: float = 0.0,
) -> SpectrumPoint:
    """Lowest ``m`` eigenpairs of a real symmetric operator."""
    if not 1 <= m <= dim:
        raise ValueError(f"need 1 <= m <= dim={dim}, got m={m}")
    converged = True
    if dense is not None and not force_iterative:
        w, v = np.linalg.eigh(dense())
        w, v = w[:m], v[:, :m]
    else:
        op = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
        # a generic start vector; the uniform one only sees the symmetric sector
        v0 = np.random.default_rng(dim).standard_normal(dim)
        ncv = min(dim, max(2 * m + 1, 20))
        try:
            w, v = eigsh(op, k=m, which="SA", v0=v0, ncv=ncv, tol=1e-12)
        except ArpackNoConvergence as exc:
            w, v, converged = exc.eigenvalues, exc.eigenvectors, False
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    v = fix_phases(v)
    res = np.array([np.linalg.norm(matvec(v[:, j]) - w[j] * v[:, j]) for j in range(len(w))])
    return SpectrumPoint(float(s), w, v if vectors else None, res, converged)


def instantaneous_spectrum(
    h: SubspaceHamiltonian, s: float, m: int = 2, vectors: bool = True, force_iterative: bool = False
) -> SpectrumPoint:
    if s == 1.0:
        # diagonal operator: Lanczos breaks down on its tiny Krylov space
        if not 1 <= m <= h.dim:
            raise ValueError(f"need 1 <= m <= dim={h.dim}, got m={m}")
        idx = np.argsort(h.problem_diagonal, kind="stable")[:m]
        w = h.problem_diagonal[idx].astype(np.float64)
        v = np.zeros((h.dim, m))
        v[idx, np.arange(m)] = 1.0
        return SpectrumPoint(1.0, w, v if vectors else None, np.zeros(m), True)
    dense = (lambda: h.dense_matrix(s)) if h.dim <= DENSE_MAX_DIM else None
    return eigenpairs(lambda x: h.apply(s, x), dense, h.dim, m, vectors, force_iterative, s)


def gap_scan_generic(
    point: Callable[[float], SpectrumPoint],
    derivative: Callable[[np.ndarray], np.ndarray],
    grid_resolution: int = 101,
    refine: bool = True,
    s_tol: float = 1e-4,
    max_brackets: int = 3,
) -> GapReport:
    """Uniform scan of E_1 - E_0 over [0, 1], then golden-section refinement.

    ``point(s)`` returns a :class:`SpectrumPoint` with at least two vectors;
    ``derivative`` applies dH~/ds.
    """
    if grid_resolution < 2:
        raise ValueError("grid needs at least two points")
    points: dict[float, SpectrumPoint] = {}

    def at(s: float) -> SpectrumPoint:
        if s not in points:
            points[s] = point(s)
        return points[s]

    grid = [float(s) for s in np.linspace(0.0, 1.0, grid_resolution)]
    gaps = np.array([at(s).gap for s in grid])
    if refine and gaps.min() >= DEGENERACY_TOL:
        # a narrow dip can sit between grid points next to any local minimum,
        # so each of the lowest few local minima gets its own bracket
        padded = np.concatenate(([np.inf], gaps, [np.inf]))
        local = [i for i in range(len(gaps)) if padded[i + 1] <= padded[i] and padded[i + 1] <= padded[i + 2]]
        for i in sorted(local, key=lambda i: gaps[i])[:max_brackets]:
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, len(grid) - 1)]
            a, b = lo + (1 - GOLDEN) * (hi - lo), lo + GOLDEN * (hi - lo)
            fa, fb = at(a).gap, at(b).gap
            while hi - lo > s_tol:
                if fa <= fb:
                    hi, b, fb = b, a, fa
                    a = lo + (1 - GOLDEN) * (hi - lo)
                    fa = at(a).gap
                else:
                    lo, a, fa = a, b, fb
                    b = lo + GOLDEN * (hi - lo)
                    fb = at(b).gap

    ordered = sorted(points.values(), key=lambda p: p.s)
    elements = []
    degenerate_s = []
    for p in ordered:
        if p.gap < DEGENERACY_TOL:
            degenerate_s.append(p.s)
            elements.append(float("nan"))
            continue
        v0, v1 = p.vectors[:, 0], p.vectors[:, 1]
        elements.append(abs(float(v1 @ derivative(v0))))
    best = min(ordered, key=lambda p: p.gap)
    finite = [e for e in elements if not math.isnan(e)]
    e_script = max(finite) if finite else float("nan")
    if degenerate_s:
        warnings.warn(
            f"E_1 - E_0 < {DEGENERACY_TOL} at s = {degenerate_s[:5]}; gap reported as degenerate",
            DegeneracyWarning,
            stacklevel=2,
        )
        g, bound = 0.0, math.inf
    else:
        g = best.gap
        bound = e_script / g**2
    return GapReport(
        g=g,
        s_star=best.s,
        E_script=e_script,
        bound=bound,
        degenerate=bool(degenerate_s),
        degenerate_s=degenerate_s,
        points=ordered,
        matrix_elements=elements,
        grid=grid,
    )


def gap_scan(
    h: SubspaceHamiltonian, grid_resolution: int = 101, refine: bool = True, levels: int = 2
) -> GapReport:
    if h.dim < 2:
        raise ValueError("gap needs a subspace of dimension at least 2")
    m = max(2, min(levels, h.dim))
    return gap_scan_generic(
        lambda s: instantaneous_spectrum(h, s, m),
        h.apply_derivative,
        grid_resolution,
        refine,
    )
