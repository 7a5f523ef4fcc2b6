"""Cut negativities, the partition-averaged pair (N1, N2), and benchmark states.

Negativity of a cut is the summed magnitude of the negative eigenvalues of
the partial transpose, ``(||rho^T_Y||_1 - 1) / 2``.  With this normalization
the Smolin state has 0.5 across every single-qubit cut.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .qstate import (
    Bipartition,
    DensityMatrix,
    _n_qubits_for,
    _partial_transpose_axes,
    as_array,
    partial_transpose,
    trace_norm,
)

NEGATIVITY_TOL = 1e-10


class NegativityPair(NamedTuple):
    """``n1``: balanced-cut geometric mean; ``n2``: single-qubit-vs-rest geometric mean."""

    n1: float
    n2: float


def negativity(rho, part: Bipartition) -> float:
    """Negativity of ``rho`` across ``part``; values below 1e-10 report as exactly 0."""
    value = 0.5 * (trace_norm(partial_transpose(rho, part)) - 1.0)
    return value if value > NEGATIVITY_TOL else 0.0


@lru_cache(maxsize=None)
def balanced_cuts(n_qubits: int) -> tuple[Bipartition, ...]:
    """All distinct floor(n/2)-vs-rest cuts.

    For even n a cut and its complement coincide, so only subsets that leave
    qubit 0 on the X side are kept (n=4 gives AB-CD, AC-BD, AD-BC).
    """
    if n_qubits < 2:
        raise ValueError("need at least two qubits to cut")
    k = n_qubits // 2
    cuts = []
    for ys in combinations(range(n_qubits), k):
        if 2 * k == n_qubits and 0 in ys:
            continue
        cuts.append(Bipartition(n_qubits, frozenset(ys)))
    if not cuts:
        # n=2: the only cut is {0}|{1}
        cuts.append(Bipartition(n_qubits, frozenset({1})))
    return tuple(cuts)


@lru_cache(maxsize=None)
def single_cuts(n_qubits: int) -> tuple[Bipartition, ...]:
    """One-qubit-vs-rest cuts; for n=2 the two orientations are one cut."""
    if n_qubits < 2:
        raise ValueError("need at least two qubits to cut")
    if n_qubits == 2:
        return (Bipartition(2, frozenset({1})),)
    return tuple(Bipartition(n_qubits, frozenset({i})) for i in range(n_qubits))


def geometric_mean(values) -> float:
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(values))))


def negativity_pair(rho) -> NegativityPair:
    """Geometric means of cut negativities over balanced and single-qubit cuts.

    For two and three qubits both families are single-qubit cuts, so
    ``n1 == n2``.
    """
    m = as_array(rho)
    n = _n_qubits_for(m.shape[0])
    n1, n2 = negativity_pairs(m[None], n)[0]
    return NegativityPair(float(n1), float(n2))


def _cut_negativities(stack: np.ndarray, n: int, cuts) -> np.ndarray:
    out = np.empty((stack.shape[0], len(cuts)))
    for j, cut in enumerate(cuts):
        pt = _partial_transpose_axes(stack, n, cut.side_y)
        pt = 0.5 * (pt + np.conj(np.swapaxes(pt, -1, -2)))
        w = np.linalg.eigvalsh(pt)
        out[:, j] = -np.where(w < 0, w, 0.0).sum(axis=-1)
    out[out <= NEGATIVITY_TOL] = 0.0
    return out


def _geo_rows(vals: np.ndarray) -> np.ndarray:
    out = np.zeros(vals.shape[0])
    ok = np.all(vals > 0, axis=1)
    out[ok] = np.exp(np.mean(np.log(vals[ok]), axis=1))
    return out


def negativity_pairs(stack: np.ndarray, n_qubits: int) -> np.ndarray:
    """Vectorized ``negativity_pair`` over a ``(k, d, d)`` stack; returns ``(k, 2)``."""
    stack = np.asarray(stack, dtype=complex)
    singles = _cut_negativities(stack, n_qubits, single_cuts(n_qubits))
    n2 = _geo_rows(singles)
    if n_qubits <= 3:
        n1 = n2.copy()
    else:
        n1 = _geo_rows(_cut_negativities(stack, n_qubits, balanced_cuts(n_qubits)))
    return np.column_stack([n1, n2])


def w_ket(n_qubits: int) -> np.ndarray:
    d = 2**n_qubits
    v = np.zeros(d)
    for k in range(n_qubits):
        v[1 << k] = 1.0
    return v / np.sqrt(n_qubits)


def w_noise_state(q: float, n_qubits: int = 4) -> DensityMatrix:
    """``q |W><W| + (1 - q) I / 2**n``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    if n_qubits < 2:
        raise ValueError("W state needs at least two qubits")
    d = 2**n_qubits
    w = w_ket(n_qubits)
    return DensityMatrix.from_matrix(q * np.outer(w, w) + (1.0 - q) * np.eye(d) / d)


_BELL = {
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
}


def bell_state(name: str = "phi+") -> DensityMatrix:
    return DensityMatrix.from_ket(_BELL[name])


def smolin_state() -> DensityMatrix:
    """Equal mixture of matching Bell-pair products on AB and CD."""
    rho = sum(np.kron(np.outer(v, v), np.outer(v, v)) for v in _BELL.values()) / 4
    return DensityMatrix.from_matrix(rho)


def separability_threshold(measure: str = "n1", n_qubits: int = 4, tol: float = 1e-7) -> float:
    """Smallest noise weight q at which the chosen mean of ``w_noise_state`` turns positive.

    Found by bisection on ``negativity > NEGATIVITY_TOL``; nothing is hardcoded.
    """
    idx = {"n1": 0, "n2": 1}[measure]

    def entangled(q):
        return negativity_pair(w_noise_state(q, n_qubits))[idx] > NEGATIVITY_TOL

    lo, hi = 0.0, 1.0
    if entangled(lo) or not entangled(hi):
        raise ValueError("threshold not bracketed in [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if entangled(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
