import numpy as np
import pytest
from scipy import stats

from entquant.entanglement import negativity_pairs
from entquant.priors import (
    PriorSpec,
    calibrate_beta,
    haar_unitary,
    mix_identity,
    sample_gh,
    sample_prior,
    sample_prior_stack,
    sample_simplex,
    sample_z,
    z_matrix,
)
from entquant.qstate import DensityMatrix


def independent_gh_purities(rng, d, size):
    """Purity of HH^dagger / Tr, with H built from scaled unit-interval draws."""
    h = (2 * rng.random((size, d, d)) - 1) + 1j * (2 * rng.random((size, d, d)) - 1)
    rho = np.einsum("sij,skj->sik", h, h.conj())
    tr = np.einsum("sii->s", rho).real
    return np.einsum("sij,sij->s", rho, rho.conj()).real / tr**2


def test_gh_purity_matches_independent_sampler():
    size = 10**4
    rng = np.random.default_rng(1)
    ours = np.array([sample_gh(rng, 2).purity() for _ in range(size)])
    ref = independent_gh_purities(np.random.default_rng(2), 4, size)
    se = np.sqrt(ours.var(ddof=1) / size + ref.var(ddof=1) / size)
    assert abs(ours.mean() - ref.mean()) < 3 * se


@pytest.mark.parametrize("spec", ["Z", "GH", "Z+I", "GH+I"])
def test_samples_are_valid_states(spec):
    rng = np.random.default_rng(4)
    for _ in range(50):
        rho = sample_prior(PriorSpec.parse(spec), rng, 3)
        assert isinstance(rho, DensityMatrix)
        assert rho.eigenvalues()[0] >= -1e-12


def test_gh_mostly_entangled_on_four_qubits():
    stack = sample_prior_stack(PriorSpec("GH"), np.random.default_rng(5), 4, 2000)
    assert np.mean(negativity_pairs(stack, 4)[:, 0] > 0) > 0.5


def test_z_eigenvalues_are_simplex_point(rng):
    eigs = sample_simplex(rng, 8)
    rho = z_matrix(eigs, haar_unitary(rng, 8))
    np.testing.assert_allclose(np.linalg.eigvalsh(rho), np.sort(eigs), atol=1e-10)


def test_simplex_moments():
    d, size = 16, 10**5
    rng = np.random.default_rng(6)
    pts = np.array([sample_simplex(rng, d) for _ in range(size)])
    np.testing.assert_allclose(pts.sum(axis=1), 1.0, atol=1e-12)
    # Dirichlet(1,...,1): mean 1/d, variance (d-1) / (d^2 (d+1))
    se = np.sqrt((d - 1) / (d**2 * (d + 1)) / size)
    assert np.all(np.abs(pts.mean(axis=0) - 1 / d) < 3 * se)
    np.testing.assert_allclose(pts.var(axis=0), (d - 1) / (d**2 * (d + 1)), rtol=0.05)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(rng, 16)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(16), atol=1e-12)


def test_haar_column_marginal():
    # |U_00|^2 of a Haar unitary on C^d follows Beta(1, d - 1)
    rng = np.random.default_rng(7)
    vals = [abs(haar_unitary(rng, 4)[0, 0]) ** 2 for _ in range(4000)]
    assert stats.kstest(vals, stats.beta(1, 3).cdf).pvalue > 0.01


def test_haar_phase_is_uniform():
    rng = np.random.default_rng(8)
    phases = [np.angle(haar_unitary(rng, 3)[1, 2]) for _ in range(4000)]
    assert stats.kstest(phases, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 0.01


def test_z_and_gh_differ_on_four_qubits():
    size = 10**4
    z = negativity_pairs(sample_prior_stack(PriorSpec("Z"), np.random.default_rng(10), 4, size), 4)[:, 0]
    gh = negativity_pairs(sample_prior_stack(PriorSpec("GH"), np.random.default_rng(11), 4, size), 4)[:, 0]
    res = stats.ks_2samp(z, gh)
    critical = 1.628 * np.sqrt(2 / size)  # two-sample KS at the 1% level
    assert res.statistic > critical


def test_mix_identity_endpoints(rng):
    rho = sample_z(rng, 2)
    np.testing.assert_allclose(mix_identity(rho, rng, 0.5, u=1.0).matrix, rho.matrix, atol=1e-15)
    np.testing.assert_allclose(mix_identity(rho, rng, 0.5, u=0.0).matrix, np.eye(4) / 4, atol=1e-15)
    with pytest.raises(ValueError):
        mix_identity(rho, rng, 0.0)


def test_mixing_raises_minimum_eigenvalue(rng):
    rho = sample_gh(rng, 2)
    mixed = mix_identity(rho, rng, 0.5, u=0.3)
    assert mixed.eigenvalues()[0] >= rho.eigenvalues()[0]


def test_sampling_is_deterministic():
    a = sample_prior_stack(PriorSpec("Z", mixed=True), np.random.default_rng(3), 2, 5)
    b = sample_prior_stack(PriorSpec("Z", mixed=True), np.random.default_rng(3), 2, 5)
    np.testing.assert_array_equal(a, b)


def test_prior_spec_parsing():
    assert PriorSpec.parse("Z") == PriorSpec("Z")
    spec = PriorSpec.parse("GH+I:0.55")
    assert spec.kind == "GH" and spec.mixed and spec.beta == 0.55 and spec.label == "GH+I"
    assert PriorSpec.parse("Z+I").beta == 0.66
    assert PriorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        PriorSpec.parse("Q")


def test_calibrated_beta_balances_two_qubit_prior():
    beta = calibrate_beta("GH", 2, np.random.default_rng(12), samples=3000)
    stack = sample_prior_stack(PriorSpec("GH", mixed=True, beta=beta), np.random.default_rng(13), 2, 3000)
    frac = np.mean(negativity_pairs(stack, 2)[:, 0] == 0)
    assert abs(frac - 0.5) < 0.04


@pytest.mark.xfail(strict=True, reason="beta=0.50 leaves about 39% of mixed GH draws separable, not 50%")
def test_gh_mixed_prior_balance_at_default_beta():
    stack = sample_prior_stack(PriorSpec("GH", mixed=True, beta=0.5), np.random.default_rng(14), 4, 10**4)
    frac = np.mean(negativity_pairs(stack, 4)[:, 0] == 0)
    assert 0.45 <= frac <= 0.55
