"""Tetrahedral SIC-POVM on each qubit, its tensor powers, and simulated shot records.

Compound outcomes are flattened base-4 little-endian over qubits: outcome
digit ``a_i`` of qubit ``i`` contributes ``a_i * 4**i`` to the flat index.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .qstate import as_array, kron_all

PAULIS = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

TETRAHEDRON = np.array(
    [
        [1, 1, 1],
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ],
    dtype=float,
) / np.sqrt(3)


def sic_qubit() -> np.ndarray:
    """The four single-qubit elements ``(I + v . sigma) / 4``, shape ``(4, 2, 2)``."""
    return np.array([(np.eye(2) + np.tensordot(v, PAULIS, axes=1)) / 4 for v in TETRAHEDRON])


def outcome_digits(index: int, n_qubits: int) -> tuple[int, ...]:
    """Per-qubit outcome digits of a flat compound index."""
    return tuple((index // 4**i) % 4 for i in range(n_qubits))


def flat_index(digits) -> int:
    return sum(int(a) * 4**i for i, a in enumerate(digits))


@lru_cache(maxsize=8)
def _frame(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    # analysis[k] . vec(rho) = Tr(rho M_k); synthesis @ f rebuilds rho from outcome frequencies
    single = sic_qubit()
    dual = 6 * single - np.eye(2)
    n_out = 4**n_qubits
    d2 = 4**n_qubits
    analysis = np.empty((n_out, d2), dtype=complex)
    synthesis = np.empty((d2, n_out), dtype=complex)
    for k in range(n_out):
        a = outcome_digits(k, n_qubits)
        analysis[k] = kron_all([single[ai].T for ai in a]).ravel()
        synthesis[:, k] = kron_all([dual[ai] for ai in a]).ravel()
    analysis.flags.writeable = False
    synthesis.flags.writeable = False
    return analysis, synthesis


@dataclass(frozen=True, eq=False)
class SicPovm:
    """Tensor power of the tetrahedral SIC-POVM on ``n_qubits`` qubits."""

    n_qubits: int
    single_qubit_elements: np.ndarray = field(default_factory=sic_qubit, repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")

    @property
    def n_outcomes(self) -> int:
        return 4**self.n_qubits

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def element(self, index: int) -> np.ndarray:
        """Compound element ``M_k`` as a dense ``(d, d)`` matrix."""
        a = outcome_digits(index, self.n_qubits)
        return kron_all([self.single_qubit_elements[ai] for ai in a])

    @cached_property
    def analysis_matrix(self) -> np.ndarray:
        return _frame(self.n_qubits)[0]

    @cached_property
    def synthesis_matrix(self) -> np.ndarray:
        return _frame(self.n_qubits)[1]


def outcome_probabilities(rho, povm: SicPovm) -> np.ndarray:
    """``p_k = Tr(rho M_k)`` for every compound outcome, clipped at 0."""
    m = as_array(rho)
    if m.shape != (povm.dim, povm.dim):
        raise ValueError(f"state of shape {m.shape} does not match a {povm.n_qubits}-qubit POVM")
    p = (povm.analysis_matrix @ m.ravel()).real
    return np.where(p > 0, p, 0.0)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Shot counts over the ``4**n`` compound outcomes.

    ``total_m == 0`` is allowed and describes an experiment with no data.
    """

    n_qubits: int
    counts: np.ndarray = field(repr=False)
    total_m: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.shape != (4**self.n_qubits,):
            raise ValueError(f"expected {4**self.n_qubits} counts, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        if int(c.sum()) != int(self.total_m):
            raise ValueError(f"counts sum to {int(c.sum())}, total_m is {self.total_m}")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "total_m", int(self.total_m))

    @classmethod
    def empty(cls, n_qubits: int) -> "MeasurementRecord":
        return cls(n_qubits, np.zeros(4**n_qubits, dtype=np.int64), 0)

    @property
    def frequencies(self) -> np.ndarray:
        if self.total_m == 0:
            raise ValueError("an empty record has no frequencies")
        return self.counts / self.total_m

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_qubits", "total_m"])
        w.writerow([self.n_qubits, self.total_m])
        w.writerow(["flat_index", "count"])
        for k, c in enumerate(self.counts):
            w.writerow([k, int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MeasurementRecord":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 3 or rows[0] != ["n_qubits", "total_m"] or rows[2] != ["flat_index", "count"]:
            raise ValueError("malformed measurement record CSV")
        n, m = int(rows[1][0]), int(rows[1][1])
        counts = np.zeros(4**n, dtype=np.int64)
        for idx, c in rows[3:]:
            counts[int(idx)] = int(c)
        return cls(n, counts, m)


def simulate_counts(rho, povm: SicPovm, m: int, rng: np.random.Generator) -> MeasurementRecord:
    """Draw ``m`` POVM shots from ``rho`` as a single multinomial sample."""
    if m < 1:
        raise ValueError("m must be at least 1")
    p = outcome_probabilities(rho, povm)
    p = p / p.sum()
    counts = rng.multinomial(int(m), p)
    return MeasurementRecord(povm.n_qubits, counts, int(m))

