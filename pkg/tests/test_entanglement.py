import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from entquant.entanglement import (
    balanced_cuts,
    bell_state,
    geometric_mean,
    negativity,
    negativity_pair,
    negativity_pairs,
    separability_threshold,
    single_cuts,
    smolin_state,
    w_noise_state,
)
from entquant.priors import sample_gh
from entquant.qstate import Bipartition, DensityMatrix, kron_all

seeds = st.integers(0, 2**32 - 1)


def all_cuts(n):
    return list(balanced_cuts(n)) + list(single_cuts(n))


def test_cut_families_for_four_qubits():
    assert {str(c) for c in balanced_cuts(4)} == {"AB-CD", "AC-BD", "AD-BC"}
    assert {str(c) for c in single_cuts(4)} == {"BCD-A", "ACD-B", "ABD-C", "ABC-D"}
    assert len(balanced_cuts(2)) == 1 and len(single_cuts(2)) == 1
    assert len(balanced_cuts(5)) == 10


def test_maximally_mixed_has_no_negativity():
    rho = DensityMatrix.maximally_mixed(4)
    for cut in all_cuts(4):
        assert negativity(rho, cut) == 0.0


def test_bell_negativity():
    # sum of |negative eigenvalues| of the partial transpose, which is -1/2 here
    assert negativity(bell_state(), Bipartition(2, frozenset({1}))) == pytest.approx(0.5, abs=1e-12)
    for name in ("phi+", "phi-", "psi+", "psi-"):
        assert negativity_pair(bell_state(name)) == pytest.approx((0.5, 0.5), abs=1e-12)


def test_smolin_state_structure():
    rho = smolin_state()
    w = np.sort(rho.eigenvalues())
    np.testing.assert_allclose(w[-4:], 0.25, atol=1e-12)
    np.testing.assert_allclose(w[:-4], 0.0, atol=1e-12)
    for cut in balanced_cuts(4):
        assert negativity(rho, cut) == 0.0
    for cut in single_cuts(4):
        assert negativity(rho, cut) == pytest.approx(0.5, abs=1e-10)


def test_smolin_pair():
    assert negativity_pair(smolin_state()) == pytest.approx((0.0, 0.5), abs=1e-10)


def test_noisy_w_at_q_08():
    n1, n2 = negativity_pair(w_noise_state(0.8))
    assert n1 == pytest.approx(0.3875, abs=5e-4)
    assert n2 == pytest.approx(0.3339, abs=5e-4)


def test_noisy_w_endpoints():
    np.testing.assert_allclose(w_noise_state(0.0).matrix, np.eye(16) / 16)
    pure = w_noise_state(1.0)
    assert np.trace(pure.matrix).real == pytest.approx(1.0)
    assert np.linalg.matrix_rank(pure.matrix, tol=1e-10) == 1
    with pytest.raises(ValueError):
        w_noise_state(1.2)


def test_separability_thresholds():
    assert separability_threshold("n1") == pytest.approx(0.1112, abs=5e-4)
    assert separability_threshold("n2") == pytest.approx(0.1262, abs=5e-4)


@given(seeds)
def test_product_states_have_zero_pair(seed):
    rng = np.random.default_rng(seed)
    rho = kron_all([sample_gh(rng, 1).matrix for _ in range(4)])
    assert tuple(negativity_pair(rho)) == (0.0, 0.0)


@given(seeds)
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = sample_gh(rng, 4).matrix
    u = kron_all([unitary_group.rvs(2, random_state=rng) for _ in range(4)])
    rotated = u @ rho @ u.conj().T
    np.testing.assert_allclose(negativity_pair(rotated), negativity_pair(rho), atol=1e-10)


def test_negativity_nondecreasing_on_grid():
    pairs = np.array([negativity_pair(w_noise_state(q)) for q in np.linspace(0, 1, 21)])
    assert np.all(np.diff(pairs, axis=0) >= 0)


def test_negativity_increases_with_signal():
    qs = np.linspace(0.15, 1.0, 12)
    pairs = np.array([negativity_pair(w_noise_state(q)) for q in qs])
    assert np.all(np.diff(pairs[:, 0]) > 0)
    assert np.all(np.diff(pairs[:, 1]) > 0)


@given(seeds, st.floats(0.0, 1.0))
def test_cut_negativity_is_convex(seed, p):
    rng = np.random.default_rng(seed)
    a, b = sample_gh(rng, 3).matrix, sample_gh(rng, 3).matrix
    for cut in all_cuts(3):
        mixed = negativity(p * a + (1 - p) * b, cut)
        assert mixed <= p * negativity(a, cut) + (1 - p) * negativity(b, cut) + 1e-10


def test_two_and_three_qubit_measures_coincide(rng):
    for n in (2, 3):
        n1, n2 = negativity_pair(sample_gh(rng, n))
        assert n1 == n2


def test_batched_pairs_match_single(rng):
    stack = np.array([sample_gh(rng, 4).matrix for _ in range(5)])
    batched = negativity_pairs(stack, 4)
    for rho, row in zip(stack, batched):
        np.testing.assert_allclose(row, negativity_pair(rho), atol=1e-14)


def test_geometric_mean():
    assert geometric_mean([2.0, 8.0]) == pytest.approx(4.0)
    assert geometric_mean([0.0, 5.0]) == 0.0
