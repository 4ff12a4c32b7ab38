import csv
import math
from math import comb

import numpy as np
import pytest

from adiaclique.errors import IntegrationError
from adiaclique.evolve import (
    EvolutionConfig,
    evolve,
    initial_state,
    reference_evolve,
    success_probability,
    write_state_csv,
)
from adiaclique.experiment import draw_instances
from adiaclique.graph import Graph, classify, generate_random_graph
from adiaclique.hamiltonian import SubspaceHamiltonian
from adiaclique.subspace import build_basis


def instance(n, seed=11, unique=True):
    inst = draw_instances(n, 1, seed, None, unique)[0]
    return SubspaceHamiltonian(generate_random_graph(n, inst.seed), inst.k)


def test_initial_state():
    psi = initial_state(build_basis(4, 2))
    np.testing.assert_array_equal(psi, np.full(6, 1 / math.sqrt(6)))
    psi = initial_state(build_basis(15, 5))
    assert psi.shape == (3003,) and np.allclose(psi, 3003**-0.5) and not psi.imag.any()

    h = SubspaceHamiltonian(generate_random_graph(9, 4), 3)
    psi = initial_state(h.basis)
    np.testing.assert_allclose(h.apply(0.0, psi), -18 * psi, atol=1e-14)


def test_zero_runtime_measures_uniform_state():
    g = generate_random_graph(10, 21)
    c = classify(g)
    h = SubspaceHamiltonian(g, c.max_clique_size)
    res = evolve(h, EvolutionConfig(0.0))
    assert res.success_probability == pytest.approx(len(c.cliques_at_max) / comb(10, c.max_clique_size), abs=1e-15)
    assert res.steps_accepted == 0


@pytest.mark.parametrize("T", [0.5, 7.0, 40.0])
def test_complete_graph_always_succeeds(T):
    h = SubspaceHamiltonian(Graph.complete(8), 3)
    assert evolve(h, EvolutionConfig(T)).success_probability == pytest.approx(1.0, abs=1e-12)


def test_adiabatic_limit_at_n8():
    h = instance(8)
    assert evolve(h, EvolutionConfig(200.0)).success_probability > 0.9


def test_matches_reference_propagator():
    h = instance(6)
    adaptive = evolve(h, EvolutionConfig(20.0))
    ref = reference_evolve(h, 20.0, n_steps=1000)
    assert abs(adaptive.success_probability - success_probability(h, ref)) < 1e-6
    # the global phase is restored too, so the states themselves agree
    assert np.linalg.norm(adaptive.final_state - ref) < 1e-6


def test_reference_zero_time_is_identity():
    h = instance(6)
    psi = initial_state(h.basis)
    np.testing.assert_array_equal(reference_evolve(h, 0.0, psi), psi)


def test_reference_converges_at_least_quadratically():
    h = instance(7)
    exact = evolve(h, EvolutionConfig(15.0, rel_tol=1e-12, abs_tol=1e-12)).final_state
    errors = [np.linalg.norm(reference_evolve(h, 15.0, n_steps=m) - exact) for m in (25, 50, 100)]
    assert errors[1] <= errors[0] / 4
    assert errors[2] <= errors[1] / 4


def test_norm_drift_and_tightening():
    h = instance(10)
    loose = evolve(h, EvolutionConfig(25.0))
    tight = evolve(h, EvolutionConfig(25.0, rel_tol=1e-10, abs_tol=1e-10))
    assert loose.norm_drift < 1e-6
    assert tight.norm_drift < loose.norm_drift


@pytest.mark.parametrize("n, seed", [(9, 1), (11, 2), (12, 3)])
def test_tolerance_robustness(n, seed):
    h = instance(n, seed)
    a = evolve(h, EvolutionConfig(12.0)).success_probability
    b = evolve(h, EvolutionConfig(12.0, rel_tol=1e-11, abs_tol=1e-11)).success_probability
    assert abs(a - b) < 1e-5


def test_global_phase_covariance():
    h = instance(8)
    psi0 = initial_state(h.basis)
    phase = np.exp(0.7j)
    a = evolve(h, EvolutionConfig(10.0), psi0)
    b = evolve(h, EvolutionConfig(10.0), psi0 * phase)
    np.testing.assert_allclose(b.final_state, a.final_state * phase, atol=1e-9)
    assert b.success_probability == pytest.approx(a.success_probability, abs=1e-12)


def test_gauge_shift_does_not_change_the_state():
    h = instance(7)
    a = evolve(h, EvolutionConfig(8.0, rel_tol=1e-11, abs_tol=1e-11))
    b = evolve(h, EvolutionConfig(8.0, rel_tol=1e-11, abs_tol=1e-11, gauge_shift=False))
    assert np.linalg.norm(a.final_state - b.final_state) < 1e-8
    assert a.steps_accepted < b.steps_accepted


def test_bitwise_determinism():
    h = instance(9)
    a = evolve(h, EvolutionConfig(13.3))
    b = evolve(h, EvolutionConfig(13.3))
    assert a.final_state.tobytes() == b.final_state.tobytes()
    assert (a.steps_accepted, a.steps_rejected) == (b.steps_accepted, b.steps_rejected)


def test_step_cap_flags_failure():
    h = instance(8)
    res = evolve(h, EvolutionConfig(50.0, max_steps=10))
    assert res.failed and res.t_reached < 50.0


def test_non_finite_amplitudes_raise():
    h = instance(6)
    psi0 = initial_state(h.basis)
    psi0[0] = np.nan
    with pytest.raises(IntegrationError):
        evolve(h, EvolutionConfig(1.0), psi0)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(-1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, rel_tol=0.0)


def test_state_csv(tmp_path):
    h = instance(6)
    res = evolve(h, EvolutionConfig(3.0))
    path = tmp_path / "state.csv"
    write_state_csv(path, h.basis, res.final_state)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "bitmask", "re", "im"]
    assert len(rows) == h.dim + 1
    amps = np.array([float(r[2]) + 1j * float(r[3]) for r in rows[1:]])
    np.testing.assert_array_equal(amps, res.final_state)
    assert [int(r[1]) for r in rows[1:]] == h.basis.masks.tolist()
