"""Interpolating Hamiltonian (1 - s) H_B + s H_P restricted to weight k.

H_B is minus the Johnson-graph adjacency (one swap of a selected and an
unselected vertex per hop). H_P is diagonal and counts the non-adjacent
pairs inside the selected vertex set.
"""
from __future__ import annotations

import numba
import numpy as np

from .errors import ResourceCapError
from .graph import Graph
from .subspace import WeightKBasis, build_basis

DENSE_MAX_DIM = 4096


@numba.njit(cache=True)
def _apply_kernel(neighbors, diag, s, shift, v, out):
    # out = ((1 - s) H_B + s H_P + (1 - s) shift) v
    dim, degree = neighbors.shape
    a = 1.0 - s
    for r in range(dim):
        acc = v[r] * 0.0
        for j in range(degree):
            acc += v[neighbors[r, j]]
        out[r] = (s * diag[r] + a * shift) * v[r] - a * acc


@numba.njit(cache=True)
def _schrodinger_kernel(neighbors, diag, s, shift, v, out):
    # out = -i H(s) v, with the same operator as _apply_kernel
    dim, degree = neighbors.shape
    a = 1.0 - s
    for r in range(dim):
        acc = 0j
        for j in range(degree):
            acc += v[neighbors[r, j]]
        w = (s * diag[r] + a * shift) * v[r] - a * acc
        out[r] = complex(w.imag, -w.real)


def problem_diagonal(g: Graph, basis: WeightKBasis) -> np.ndarray:
    """Missing-edge count inside each basis subset."""
    if g.n != basis.n:
        raise ValueError(f"basis is for n={basis.n}, graph has n={g.n}")
    bits = basis.bits().astype(np.int32)
    missing = (~g.adjacency_matrix() & ~np.eye(g.n, dtype=bool)).astype(np.int32)
    return (np.einsum("ri,ij,rj->r", bits, missing, bits) // 2).astype(np.int16)


class SubspaceHamiltonian:
    """H~(s) for one graph and clique size ``k``.

    ``problem_diagonal`` holds exact integers; entry ``r`` is zero iff the
    subset ``basis.unrank(r)`` is a clique.
    """

    def __init__(self, graph: Graph, k: int, basis: WeightKBasis | None = None):
        self.graph = graph
        self.basis = basis if basis is not None else build_basis(graph.n, k)
        if self.basis.k != k:
            raise ValueError("basis weight does not match k")
        self.k = k
        self.problem_diagonal = problem_diagonal(graph, self.basis)
        self.problem_diagonal.setflags(write=False)
        self._diag = self.problem_diagonal.astype(np.float64)
        self.neighbors = self.basis.neighbor_table()
        self.neighbors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def dim(self) -> int:
        return self.basis.dim

    def clique_indices(self) -> np.ndarray:
        return np.flatnonzero(self.problem_diagonal == 0)

    def _check(self, psi):
        psi = np.asarray(psi)
        if psi.shape != (self.dim,):
            raise ValueError(f"state has shape {psi.shape}, expected ({self.dim},)")
        if psi.dtype not in (np.float64, np.complex128):
            psi = psi.astype(np.complex128 if np.iscomplexobj(psi) else np.float64)
        return np.ascontiguousarray(psi)

    def apply(self, s: float, psi: np.ndarray, shift: float = 0.0) -> np.ndarray:
        """H~(s) psi, optionally plus ``(1 - s) * shift * psi``."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s={s} outside [0, 1]")
        psi = self._check(psi)
        out = np.empty_like(psi)
        _apply_kernel(self.neighbors, self._diag, float(s), float(shift), psi, out)
        return out

    def apply_derivative(self, psi: np.ndarray) -> np.ndarray:
        """dH~/ds psi = (H_P - H_B) psi."""
        return self.apply(1.0, psi) - self.apply(0.0, psi)

    def hopping_matrix(self):
        """Sparse H_B (scipy CSR)."""
        from scipy import sparse

        rows = np.repeat(np.arange(self.dim), self.basis.degree)
        cols = self.neighbors.ravel()
        data = -np.ones(len(cols))
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim))

    def dense_matrix(self, s: float, max_dim: int = DENSE_MAX_DIM) -> np.ndarray:
        if self.dim > max_dim:
            raise ResourceCapError(f"dense matrix of dim {self.dim} exceeds {max_dim}")
        m = np.zeros((self.dim, self.dim))
        rows = np.repeat(np.arange(self.dim), self.basis.degree)
        m[rows, self.neighbors.ravel()] = -(1.0 - s)
        m[np.diag_indices(self.dim)] = s * self._diag
        return m
