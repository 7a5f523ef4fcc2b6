"""Likelihood of shot records, linear-inversion tomography, clipped MLE and its bootstrap."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .entanglement import NegativityPair, negativity_pairs
from .povm import MeasurementRecord, SicPovm, outcome_probabilities, simulate_counts
from .qstate import DensityMatrix, PSD_TOL, project_to_physical

Data = Union[MeasurementRecord, np.ndarray]


def _check(record: MeasurementRecord, povm: SicPovm):
    if record.n_qubits != povm.n_qubits:
        raise ValueError(f"record has {record.n_qubits} qubits, POVM has {povm.n_qubits}")


def log_likelihood_from_probs(p: np.ndarray, counts: np.ndarray) -> float:
    """``sum_k counts_k log p_k`` over observed outcomes; ``-inf`` if one is impossible."""
    seen = counts > 0
    ps = p[seen]
    if np.any(ps <= 0):
        return -np.inf
    return float(counts[seen] @ np.log(ps))


def log_likelihood(rho, record: MeasurementRecord, povm: SicPovm) -> float:
    """Natural log of the multinomial likelihood (without the combinatorial constant)."""
    _check(record, povm)
    return log_likelihood_from_probs(outcome_probabilities(rho, povm), record.counts)


def max_log_likelihood(record: MeasurementRecord) -> float:
    """Upper bound ``sum_k counts_k log(counts_k / M)`` reached when probabilities equal frequencies."""
    c = record.counts[record.counts > 0]
    if c.size == 0:
        return 0.0
    return float(c @ np.log(c / record.total_m))


def _frequencies(data: Data, povm: SicPovm) -> np.ndarray:
    if isinstance(data, MeasurementRecord):
        _check(data, povm)
        return data.frequencies
    f = np.asarray(data, dtype=float)
    if f.shape != (povm.n_outcomes,):
        raise ValueError(f"expected {povm.n_outcomes} frequencies, got shape {f.shape}")
    return f


def linear_inversion(data: Data, povm: SicPovm) -> np.ndarray:
    """Reconstruct ``rho_tomo`` by equating outcome probabilities with frequencies.

    Applies the single-qubit dual frame ``6 Pi_a - I`` on every qubit, which is
    the tensor-product form of the alternating 6**k coefficient formula.
    ``data`` is a record or a raw frequency vector.  The result is Hermitian
    with unit trace but may have negative eigenvalues.
    """
    f = _frequencies(data, povm)
    rho = (povm.synthesis_matrix @ f).reshape(povm.dim, povm.dim)
    return 0.5 * (rho + rho.conj().T)


def mle_estimate(data: Data, povm: SicPovm) -> DensityMatrix:
    """Linear inversion, clipped to the nearest-spectrum physical state when needed."""
    rho = linear_inversion(data, povm)
    if np.linalg.eigvalsh(rho)[0] >= -PSD_TOL:
        return DensityMatrix.from_matrix(rho)
    return project_to_physical(rho)


def bootstrap_negativity(
    rho_mle,
    povm: SicPovm,
    m: Optional[int],
    k_resamples: int,
    rng: np.random.Generator,
) -> list[NegativityPair]:
    """Negativity pairs of MLE estimates refit to data simulated from ``rho_mle``.

    ``m=None`` feeds the exact outcome probabilities instead of sampled counts,
    which makes every resample identical.
    """
    if k_resamples < 2:
        raise ValueError("bootstrap needs at least two resamples")
    estimates = []
    for _ in range(k_resamples):
        if m is None:
            data = outcome_probabilities(rho_mle, povm)
        else:
            data = simulate_counts(rho_mle, povm, m, rng)
        estimates.append(mle_estimate(data, povm).matrix)
    pairs = negativity_pairs(np.array(estimates), povm.n_qubits)
    return [NegativityPair(float(a), float(b)) for a, b in pairs]
