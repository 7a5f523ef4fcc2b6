"""Density matrices on n qubits and the linear algebra shared by the rest of the package.

Index convention: qubit 0 is the most significant tensor factor, so a
computational basis index ``i`` has binary digits ``(i_0, ..., i_{n-1})`` with
``i = sum_k i_k * 2**(n - 1 - k)``.  Reshaping a ``(d, d)`` matrix to
``(2,)*n + (2,)*n`` therefore puts the row digit of qubit ``k`` on axis ``k``
and its column digit on axis ``n + k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class DegenerateInputError(ValueError):
    """Raised when a matrix has no positive spectral weight to renormalize."""


def _n_qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on ``n_qubits`` qubits.

    The stored array is read-only.  Construction validates all three
    invariants and raises ``ValueError`` on violation.
    """

    n_qubits: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        d = 2**self.n_qubits
        if self.n_qubits < 1 or m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix for {self.n_qubits} qubits, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError("matrix has negative eigenvalues")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "DensityMatrix":
        """Wrap ``matrix`` after symmetrizing away rounding-level anti-Hermitian parts."""
        m = np.asarray(matrix, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return cls(_n_qubits_for(m.shape[0]), m)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(n_qubits, np.eye(d) / d)

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls.from_matrix(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def to_dict(self) -> dict:
        """JSON-ready form: row-major ``[re, im]`` pairs plus the qubit count."""
        flat = self.matrix.ravel()
        return {
            "n_qubits": self.n_qubits,
            "matrix": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DensityMatrix":
        n = int(data["n_qubits"])
        d = 2**n
        pairs = np.asarray(data["matrix"], dtype=float)
        if pairs.shape != (d * d, 2):
            raise ValueError(f"expected {d * d} (re, im) pairs, got shape {pairs.shape}")
        m = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(d, d)
        return cls(n, m)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Bipartition:
    """A cut of ``n_qubits`` qubits into ``side_y`` and its complement."""

    n_qubits: int
    side_y: frozenset

    def __post_init__(self):
        y = frozenset(int(i) for i in self.side_y)
        if not y or len(y) >= self.n_qubits:
            raise ValueError("side_y must be a nonempty proper subset of the qubits")
        if min(y) < 0 or max(y) >= self.n_qubits:
            raise ValueError(f"qubit index out of range for {self.n_qubits} qubits")
        object.__setattr__(self, "side_y", y)

    @property
    def side_x(self) -> frozenset:
        return frozenset(range(self.n_qubits)) - self.side_y

    def __str__(self):
        letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        name = lambda s: "".join(letters[i] if i < 26 else f"q{i}" for i in sorted(s))
        return f"{name(self.side_x)}-{name(self.side_y)}"


def as_array(rho) -> np.ndarray:
    """Return the raw matrix of a ``DensityMatrix`` or pass an array through."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Left-to-right Kronecker product of ``factors``."""
    factors = list(factors)
    if not factors:
        raise ValueError("kron_all needs at least one factor")
    for f in factors:
        f = np.asarray(f)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError("every factor must be a square matrix")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def partial_transpose(rho, part: Bipartition) -> np.ndarray:
    """Transpose the row and column digits of every qubit in ``part.side_y``.

    Pure index permutation; no arithmetic touches the entries.
    """
    m = as_array(rho)
    n = _n_qubits_for(m.shape[0])
    if part.n_qubits != n:
        raise ValueError(f"bipartition is for {part.n_qubits} qubits, state has {n}")
    return _partial_transpose_axes(m, n, part.side_y)


def _partial_transpose_axes(m: np.ndarray, n: int, ys: Iterable[int]) -> np.ndarray:
    lead = m.shape[:-2]
    b = len(lead)
    axes = list(range(b + 2 * n))
    for k in ys:
        axes[b + k], axes[b + n + k] = axes[b + n + k], axes[b + k]
    d = 2**n
    return m.reshape(lead + (2,) * (2 * n)).transpose(axes).reshape(lead + (d, d))


def trace_norm(h: np.ndarray, tol: float = 1e-10) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > tol:
        raise ValueError("trace_norm requires a Hermitian matrix")
    return float(np.abs(np.linalg.eigvalsh(h)).sum())


def project_to_physical(h: np.ndarray) -> DensityMatrix:
    """Clip negative eigenvalues to zero and renormalize to unit trace.

    Eigenvalues in ``[-PSD_TOL, 0)`` count as zero.  Raises
    ``DegenerateInputError`` if nothing positive remains.
    """
    h = np.asarray(h, dtype=complex)
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.where(w > 0, w, 0.0)
    total = w.sum()
    if total <= PSD_TOL:
        raise DegenerateInputError("no positive eigenvalues to renormalize")
    out = (v * (w / total)) @ v.conj().T
    return DensityMatrix.from_matrix(out)


def is_physical(h: np.ndarray, tol: float = PSD_TOL) -> bool:
    return bool(np.linalg.eigvalsh(0.5 * (h + np.conj(h).T))[0] >= -tol)
