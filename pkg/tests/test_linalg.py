import numpy as np
import pytest

from expanderprune.errors import DomainError, ShapeError
from expanderprune.linalg import (
    bipartite_adjacency,
    sym_eigenvalues,
    top_two_singular_values,
)
from oracles import qr_eigenvalues

# qr_eigenvalues output for the seed-88 symmetric 8x8 below, frozen.
FROZEN_8X8_SPECTRUM = [
    2.5733420519454016,
    2.353060564605534,
    1.540323555186778,
    0.8169544698702332,
    -0.3599420547072052,
    -1.0213338040195599,
    -1.3958445432862183,
    -3.347945759729373,
]


def seed88_symmetric_8x8():
    rng = np.random.default_rng(88)
    M = rng.standard_normal((8, 8))
    return (M + M.T) / 2


def test_two_cycle_spectrum():
    assert np.allclose(sym_eigenvalues([[0, 1], [1, 0]]), [1.0, -1.0], atol=1e-12)


def test_path3_spectrum():
    eigs = sym_eigenvalues([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert np.allclose(eigs, [np.sqrt(2), 0.0, -np.sqrt(2)], atol=1e-12)


def test_random_8x8_matches_frozen_qr_oracle():
    M = seed88_symmetric_8x8()
    eigs = sym_eigenvalues(M)
    assert np.allclose(eigs, FROZEN_8X8_SPECTRUM, atol=1e-8)
    # and the oracle itself reproduces its frozen output
    assert np.allclose(qr_eigenvalues(M), FROZEN_8X8_SPECTRUM, atol=1e-12)


def test_qr_oracle_hand_cases():
    # closed forms: P3 and P3 + 2I
    P3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    assert np.allclose(qr_eigenvalues(P3), [np.sqrt(2), 0, -np.sqrt(2)], atol=1e-12)
    assert np.allclose(
        qr_eigenvalues(P3 + 2 * np.eye(3)), [2 + np.sqrt(2), 2, 2 - np.sqrt(2)], atol=1e-12
    )
    assert np.allclose(
        qr_eigenvalues([[3.0, 1.0], [1.0, 2.0]]),
        [(5 + np.sqrt(5)) / 2, (5 - np.sqrt(5)) / 2],
        atol=1e-12,
    )


def test_sym_eigenvalues_rejects_bad_input():
    with pytest.raises(ShapeError):
        sym_eigenvalues(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        sym_eigenvalues([[0, 1], [2, 0]])
    with pytest.raises(DomainError):
        sym_eigenvalues([[np.nan, 0], [0, 1]])


def test_sym_eigenvalues_deterministic():
    M = seed88_symmetric_8x8()
    a = sym_eigenvalues(M)
    b = sym_eigenvalues(M.copy())
    assert np.array_equal(a, b)


def test_identity_singular_values():
    s1, s2, degenerate = top_two_singular_values(np.eye(2))
    assert (s1, s2, degenerate) == (1.0, 1.0, False)


def test_rank_one_all_ones():
    s1, s2, _ = top_two_singular_values([[1, 1], [1, 1]])
    assert abs(s1 - 2.0) < 1e-12
    assert abs(s2) < 1e-12


def test_all_zero_is_degenerate():
    s1, s2, degenerate = top_two_singular_values(np.zeros((3, 5)))
    assert (s1, s2) == (0.0, 0.0)
    assert degenerate


def test_negative_entries_rejected():
    with pytest.raises(DomainError):
        top_two_singular_values([[1.0, -0.5], [0.0, 1.0]])


def test_random_sparse_50x50_matches_dense_eigensolver():
    rng = np.random.default_rng(5)
    B = rng.random((50, 50)) * (rng.random((50, 50)) < 0.1)
    s1, s2, _ = top_two_singular_values(B)
    eigs = sym_eigenvalues(bipartite_adjacency(B))
    assert abs(s1 - eigs[0]) < 1e-7
    assert abs(s2 - eigs[1]) < 1e-7


def test_iterative_path_matches_dense_svd():
    # min(m, n) > 64 forces the power/deflation path
    rng = np.random.default_rng(11)
    for trial in range(5):
        B = rng.random((80, 120)) * (rng.random((80, 120)) < 0.05)
        if not B.any():
            continue
        s1, s2, _ = top_two_singular_values(B)
        ref = np.linalg.svd(B, compute_uv=False)
        assert abs(s1 - ref[0]) <= 1e-8 * max(ref[0], 1.0)
        assert abs(s2 - ref[1]) <= 1e-8 * max(ref[0], 1.0)


def test_iterative_path_handles_tied_top_pair():
    # two identical diagonal blocks duplicate every singular value
    rng = np.random.default_rng(12)
    C = rng.random((40, 40))
    B = np.zeros((80, 80))
    B[:40, :40] = C
    B[40:, 40:] = C
    s1, s2, _ = top_two_singular_values(B)
    ref = np.linalg.svd(C, compute_uv=False)[0]
    assert abs(s1 - ref) <= 1e-8 * ref
    assert abs(s2 - ref) <= 1e-8 * ref


def test_iterative_path_deterministic():
    rng = np.random.default_rng(31)
    B = rng.random((70, 90)) * (rng.random((70, 90)) < 0.2)
    assert top_two_singular_values(B) == top_two_singular_values(B.copy())


def test_bipartite_spectrum_is_plus_minus_singular_values():
    rng = np.random.default_rng(21)
    for trial in range(10):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(2, 9))
        B = rng.random((m, n)) * (rng.random((m, n)) < 0.6)
        eigs = sym_eigenvalues(bipartite_adjacency(B))
        svals = np.linalg.svd(B, compute_uv=False)
        expected = np.concatenate([svals, np.zeros(m + n - 2 * svals.size), -svals[::-1]])
        assert np.allclose(np.sort(eigs), np.sort(expected), atol=1e-8)


def test_gershgorin_bound_holds():
    rng = np.random.default_rng(4)
    for trial in range(20):
        M = rng.standard_normal((6, 6))
        M = (M + M.T) / 2
        eigs = sym_eigenvalues(M)
        assert np.max(np.abs(eigs)) <= np.max(np.abs(M).sum(axis=1)) + 1e-9
