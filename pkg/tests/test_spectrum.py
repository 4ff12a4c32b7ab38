import itertools

import numpy as np
import pytest

from adiaclique.evolve import initial_state
from adiaclique.graph import Graph, generate_random_graph
from adiaclique.hamiltonian import SubspaceHamiltonian
from adiaclique.spectrum import DegeneracyWarning, gap_scan, instantaneous_spectrum


def johnson_adjacency(n, k):
    """Adjacency of J(n, k) built directly from k-subsets."""
    subsets = [frozenset(c) for c in itertools.combinations(range(n), k)]
    a = np.zeros((len(subsets), len(subsets)))
    for i, x in enumerate(subsets):
        for j, y in enumerate(subsets):
            a[i, j] = len(x & y) == k - 1
    return a


def test_s0_ground_state_is_uniform():
    h = SubspaceHamiltonian(generate_random_graph(8, 2), 3)
    p = instantaneous_spectrum(h, 0.0, 2)
    assert p.energies[0] == pytest.approx(-15)
    np.testing.assert_allclose(p.vectors[:, 0], initial_state(h.basis).real, atol=1e-12)


def test_s1_ground_energy():
    g = Graph.from_edges(6, [(1, 2), (1, 3), (2, 3), (4, 5)])
    assert instantaneous_spectrum(SubspaceHamiltonian(g, 3), 1.0).energies[0] == pytest.approx(0.0, abs=1e-12)
    p = instantaneous_spectrum(SubspaceHamiltonian(Graph.empty(7), 3), 1.0, 3)
    np.testing.assert_allclose(p.energies, 3.0, atol=1e-12)


@pytest.mark.parametrize("n, k", [(5, 2), (6, 3), (7, 2), (8, 3)])
def test_gap_at_s0_is_johnson_gap(n, k):
    w = np.linalg.eigvalsh(-johnson_adjacency(n, k))
    johnson_gap = w[1] - w[0]
    for seed in (1, 2, 3):
        h = SubspaceHamiltonian(generate_random_graph(n, seed), k)
        assert instantaneous_spectrum(h, 0.0).gap == pytest.approx(johnson_gap, abs=1e-10)
    assert johnson_gap == pytest.approx(n)


def test_complete_graph_gap_closes_only_at_s1():
    # H_P vanishes on K_6, so H(s) = (1 - s) H_B and the gap is 6 (1 - s)
    h = SubspaceHamiltonian(Graph.complete(6), 3)
    for s in np.linspace(0, 0.99, 12):
        assert instantaneous_spectrum(h, s).gap == pytest.approx(6 * (1 - s), abs=1e-10)
    with pytest.warns(DegeneracyWarning):
        rep = gap_scan(h, 21)
    assert rep.degenerate and rep.degenerate_s == [1.0] and rep.g == 0.0 and rep.bound == np.inf


@pytest.mark.parametrize("n, k, seed", [(7, 3, 1), (8, 4, 2), (9, 3, 3), (10, 4, 4)])
def test_iterative_matches_dense(n, k, seed):
    h = SubspaceHamiltonian(generate_random_graph(n, seed), k)
    for s in (0.0, 0.4, 0.8, 1.0):
        dense = np.linalg.eigvalsh(h.dense_matrix(s))[:3]
        it = instantaneous_spectrum(h, s, 3, force_iterative=True)
        np.testing.assert_allclose(it.energies, dense, atol=1e-10)
        np.testing.assert_allclose(instantaneous_spectrum(h, s, 3).energies, dense, atol=1e-10)


def test_eigenpairs_are_accurate_and_orthonormal():
    h = SubspaceHamiltonian(generate_random_graph(9, 8), 4)
    for s in (0.2, 0.6, 0.95):
        p = instantaneous_spectrum(h, s, 4)
        norm = np.linalg.norm(h.dense_matrix(s), 2)
        assert np.all(p.residuals < 1e-8 * norm)
        np.testing.assert_allclose(p.vectors.T @ p.vectors, np.eye(4), atol=1e-10)
        assert np.all(np.diff(p.energies) >= 0)
        lead = p.vectors[np.argmax(np.abs(p.vectors), axis=0), range(4)]
        assert np.all(lead > 0)


def test_gap_scan_refines_and_bounds_ground_energy_slope():
    h = SubspaceHamiltonian(generate_random_graph(8, 52), 4)
    rep = gap_scan(h, 101)
    assert not rep.degenerate and rep.g > 0
    assert rep.bound == pytest.approx(rep.E_script / rep.g**2)
    # refined minimum is no worse than any grid value
    assert rep.g <= min(p.gap for p in rep.points) + 1e-15
    assert len(list(rep.rows())) == 101
    assert len(list(rep.rows(refined=True))) > 101
    # E_0 moves at most |dH/ds| per unit s
    slope = np.linalg.norm(h.dense_matrix(1.0) - h.dense_matrix(0.0), 2)
    grid = [p for p in rep.points if p.s in set(rep.grid)]
    e0 = np.array([p.energies[0] for p in grid])
    assert np.all(np.abs(np.diff(e0)) <= slope * 0.01 + 1e-12)


def test_matrix_element_matches_dense():
    h = SubspaceHamiltonian(generate_random_graph(7, 5), 3)
    rep = gap_scan(h, 11, refine=False)
    d = h.dense_matrix(1.0) - h.dense_matrix(0.0)
    for p, me in zip(rep.points, rep.matrix_elements):
        w, v = np.linalg.eigh(h.dense_matrix(p.s))
        assert me == pytest.approx(abs(v[:, 1] @ d @ v[:, 0]), abs=1e-9)
    assert rep.E_script == max(rep.matrix_elements)


def test_csv_export(tmp_path):
    h = SubspaceHamiltonian(generate_random_graph(7, 5), 3)
    rep = gap_scan(h, 11, levels=3)
    path = tmp_path / "gap.csv"
    rep.write_csv(path, ["comment line"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# comment line"
    assert lines[1] == "s,E_0,E_1,E_2,gap,matrix_element"
    assert len(lines) == 2 + 11
