"""Schrodinger evolution under H(t) = H~(t / T) in the weight-k subspace.

The production integrator is the Dormand-Prince 5(4) embedded pair with
local error control ``||err||_2 <= abs_tol + rel_tol * ||psi||_2``, safety
factor 0.9 and step-size changes clamped to [0.2, 5].

The RHS is integrated in a shifted gauge, ``H(t) + (1 - t/T) k(n-k)``, which
puts the initial ground energy at zero so the dominant amplitude carries no
fast phase. Adding a multiple of the identity only changes the global phase;
that phase, ``k(n-k) T / 2``, is restored exactly on output.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, ResourceCapError
from .hamiltonian import SubspaceHamiltonian, _schrodinger_kernel
from .subspace import WeightKBasis

# Dormand & Prince (1980), fifth-order solution weights and the 5th-minus-4th
# error weights; the seventh stage is evaluated at the accepted point (FSAL).
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass(frozen=True)
class EvolutionConfig:
    T: float
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_steps: int = 5_000_000
    initial_step: float | None = None  # defaults to T / 1000
    gauge_shift: bool = True

    def __post_init__(self):
        if not self.T >= 0:
            raise ValueError(f"run time must be non-negative, got {self.T}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    success_probability: float
    norm_drift: float
    steps_accepted: int
    steps_rejected: int
    failed: bool = False
    t_reached: float = 0.0


def initial_state(basis: WeightKBasis) -> np.ndarray:
    """Uniform superposition over the weight-k basis."""
    return np.full(basis.dim, 1.0 / math.sqrt(basis.dim), dtype=np.complex128)


def success_probability(h: SubspaceHamiltonian, psi: np.ndarray) -> float:
    """Weight of ``psi`` on clique basis states, relative to its squared norm."""
    weights = np.abs(psi) ** 2
    total = float(weights.sum())
    return float(weights[h.problem_diagonal == 0].sum()) / total


def evolve(h: SubspaceHamiltonian, cfg: EvolutionConfig, psi0: np.ndarray | None = None) -> EvolutionResult:
    psi = initial_state(h.basis) if psi0 is None else np.array(psi0, dtype=np.complex128)
    if psi.shape != (h.dim,):
        raise ValueError(f"initial state has shape {psi.shape}, expected ({h.dim},)")
    if cfg.T == 0.0:
        return EvolutionResult(psi, success_probability(h, psi), abs(1.0 - np.linalg.norm(psi)), 0, 0)

    T = float(cfg.T)
    shift = float(h.basis.degree) if cfg.gauge_shift else 0.0
    nb, diag = h.neighbors, h._diag

    K = np.empty((7, h.dim), dtype=np.complex128)
    y = np.empty(h.dim, dtype=np.complex128)
    _schrodinger_kernel(nb, diag, 0.0, shift, psi, K[0])

    t = 0.0
    step = cfg.initial_step if cfg.initial_step is not None else T / 1000.0
    accepted = rejected = 0
    failed = False
    while t < T:
        if accepted + rejected >= cfg.max_steps:
            failed = True
            break
        last = t + step >= T
        if last:
            step = T - t
        for i in range(1, 7):
            np.copyto(y, psi)
            for j, a in enumerate(_A[i]):
                if a:
                    y += (step * a) * K[j]
            _schrodinger_kernel(nb, diag, min((t + _C[i] * step) / T, 1.0), shift, y, K[i])
        # y now holds the fifth-order solution (stage 7 input)
        err = float(np.linalg.norm(step * (_E @ K)))
        tol = cfg.abs_tol + cfg.rel_tol * float(np.linalg.norm(psi))
        if not math.isfinite(err):
            raise IntegrationError(f"non-finite error estimate at t={t}")
        if err <= tol:
            t = T if last else t + step
            psi, y = y, psi
            K[0] = K[6]
            accepted += 1
            factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * (tol / err) ** 0.2))
        else:
            rejected += 1
            factor = min(1.0, max(MIN_FACTOR, SAFETY * (tol / err) ** 0.2))
        step *= factor

    if not np.all(np.isfinite(psi)):
        raise IntegrationError("non-finite amplitudes in final state")
    # undo the gauge phase accumulated up to the reached time
    phase = shift * (t - t * t / (2.0 * T))
    psi = psi * np.exp(1j * phase)
    return EvolutionResult(
        final_state=psi,
        success_probability=success_probability(h, psi),
        norm_drift=abs(1.0 - float(np.linalg.norm(psi))),
        steps_accepted=accepted,
        steps_rejected=rejected,
        failed=failed,
        t_reached=t,
    )


REFERENCE_MAX_DIM = 1024
_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def reference_evolve(h: SubspaceHamiltonian, T: float, psi0: np.ndarray | None = None, n_steps: int = 2000) -> np.ndarray:
    """Fixed-step fourth-order Magnus propagation with dense exponentials.

    Independent of :func:`evolve`: no Runge-Kutta stages, no step control,
    no gauge shift. Each step exponentiates the two-point Gauss-Legendre
    Magnus generator exactly by Hermitian eigendecomposition.
    """
    if h.dim > REFERENCE_MAX_DIM:
        raise ResourceCapError(f"reference propagation limited to dim <= {REFERENCE_MAX_DIM}")
    psi = initial_state(h.basis) if psi0 is None else np.array(psi0, dtype=np.complex128)
    if T == 0:
        return psi
    hb = h.dense_matrix(0.0)
    hp = np.diag(h._diag)
    dt = T / n_steps
    c = math.sqrt(3) / 12 * dt * dt
    for m in range(n_steps):
        s1, s2 = ((m + g) * dt / T for g in _GAUSS)
        h1 = (1 - s1) * hb + s1 * hp
        h2 = (1 - s2) * hb + s2 * hp
        gen = 0.5 * dt * (h1 + h2) - 1j * c * (h2 @ h1 - h1 @ h2)
        w, v = np.linalg.eigh(gen)
        psi = v @ (np.exp(-1j * w) * (v.conj().T @ psi))
    return psi


def write_state_csv(path, basis: WeightKBasis, psi: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "bitmask", "re", "im"])
        for r, (mask, amp) in enumerate(zip(basis.masks.tolist(), psi)):
            writer.writerow([r, mask, repr(float(amp.real)), repr(float(amp.imag))])
