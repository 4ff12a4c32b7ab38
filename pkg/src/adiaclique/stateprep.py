"""Preparation of the uniform weight-k superposition.

Two routes are modelled. The measurement route applies a biased Hadamard to
every qubit and measures the Hamming weight; only its outcome statistics
(Binomial(n, k/n)) matter, so it is modelled by sampling. The adiabatic
route interpolates from the uniform superposition over all bitstrings to
``(sum_i z_i - k)^2`` inside the (n+1)-dimensional permutation-symmetric
subspace, spanned by the S_z eigenstates ``|m>``, m = -n/2 .. n/2.
"""
from __future__ import annotations

import math

import numpy as np

from .spectrum import GapReport, SpectrumPoint, fix_phases, gap_scan_generic


def biased_prep_probability(n: int, k: int) -> float:
    """Probability that the weight measurement returns exactly ``k``.

    ``C(n,k) (k/n)^k (1-k/n)^(n-k)``, evaluated in log space.
    """
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    if k in (0, n):
        return 1.0
    q = k / n
    log_p = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        + k * math.log(q) + (n - k) * math.log1p(-q)
    )
    return math.exp(log_p)


def biased_prep_sample(n: int, k: int, seed: int, trials: int, chunk: int = 1_000_000) -> float:
    """Empirical frequency of weight-``k`` outcomes over ``trials`` preparations."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    hits = 0
    remaining = trials
    while remaining:
        size = min(chunk, remaining)
        hits += int(np.count_nonzero(rng.binomial(n, k / n, size=size) == k))
        remaining -= size
    return hits / trials


def expected_repetitions(n: int, k: int) -> float:
    return 1.0 / biased_prep_probability(n, k)


class SymmetricPrepHamiltonian:
    """(1 - s)(n/2 - S_x) + s (n/2 - S_z - k)^2 on the symmetric subspace."""

    def __init__(self, n: int, k: int):
        if n < 1 or not 0 <= k <= n:
            raise ValueError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
        self.n = n
        self.k = k
        j = n / 2
        self.m = np.arange(-j, j + 1)
        lower = self.m[:-1]
        # <m+1|S_x|m> = <m|S_x|m+1> = sqrt(j(j+1) - m(m+1)) / 2
        off = 0.5 * np.sqrt(j * (j + 1) - lower * (lower + 1))
        self.sx = np.diag(off, 1) + np.diag(off, -1)
        self.beginning = j * np.eye(n + 1) - self.sx
        self.problem_diagonal = (j - self.m - k) ** 2
        self.problem = np.diag(self.problem_diagonal)

    @property
    def dim(self) -> int:
        return self.n + 1

    def matrix(self, s: float) -> np.ndarray:
        return (1.0 - s) * self.beginning + s * self.problem

    def derivative(self) -> np.ndarray:
        return self.problem - self.beginning

    def spectrum(self, s: float, m: int = 2) -> SpectrumPoint:
        w, v = np.linalg.eigh(self.matrix(s))
        m = min(m, self.dim)
        v = fix_phases(v[:, :m])
        h = self.matrix(s)
        res = np.linalg.norm(h @ v - v * w[None, :m], axis=0)
        return SpectrumPoint(float(s), w[:m], v, res)


def symmetric_prep_gap(n: int, k: int, grid: int = 101, refine: bool = True, levels: int = 4) -> GapReport:
    ham = SymmetricPrepHamiltonian(n, k)
    d = ham.derivative()
    return gap_scan_generic(
        lambda s: ham.spectrum(s, max(2, levels)),
        lambda v: d @ v,
        grid,
        refine,
    )
