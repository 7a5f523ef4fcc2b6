"""Samplers for the Z and GH priors over density matrices and their identity-mixed variants.

Z prior: ``rho = V diag(e) V^dagger`` with ``e`` uniform on the probability
simplex and ``V`` Haar-random on U(d).  GH prior: ``rho = H H^dagger / Tr``
with the real and imaginary parts of every entry of ``H`` uniform on (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .entanglement import NEGATIVITY_TOL, negativity_pairs
from .qstate import DensityMatrix, as_array

DEFAULT_BETA = {"Z": 0.66, "GH": 0.50}


@dataclass(frozen=True)
class PriorSpec:
    """Which prior measure to sample and whether to mix in the identity.

    ``beta`` is the distortion exponent of ``lambda = u**beta``; it defaults
    to 0.66 for Z and 0.50 for GH and is ignored when ``mixed`` is false.
    """

    kind: Literal["Z", "GH"]
    mixed: bool = False
    beta: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.kind not in DEFAULT_BETA:
            raise ValueError(f"unknown prior kind {self.kind!r}; expected 'Z' or 'GH'")
        if self.beta is None:
            object.__setattr__(self, "beta", DEFAULT_BETA[self.kind])
        if self.mixed and not self.beta > 0:
            raise ValueError("beta must be positive for a mixed prior")

    @property
    def label(self) -> str:
        return f"{self.kind}+I" if self.mixed else self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mixed": self.mixed, "beta": self.beta}

    @classmethod
    def from_dict(cls, data: dict) -> "PriorSpec":
        return cls(kind=data["kind"], mixed=bool(data.get("mixed", False)), beta=data.get("beta"))

    @classmethod
    def parse(cls, text: str) -> "PriorSpec":
        """Parse ``"Z"``, ``"GH"``, ``"Z+I"`` or ``"GH+I:0.55"``."""
        head, _, beta = text.partition(":")
        mixed = head.endswith("+I")
        kind = head[:-2] if mixed else head
        return cls(kind=kind, mixed=mixed, beta=float(beta) if beta else None)


def sample_simplex(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform point on the (d-1)-simplex via normalized exponentials."""
    e = rng.standard_exponential(d)
    return e / e.sum()


def haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random unitary from the QR factorization of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def gh_matrix(h: np.ndarray) -> np.ndarray:
    rho = h @ h.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def z_matrix(eigs: np.ndarray, v: np.ndarray) -> np.ndarray:
    rho = (v * eigs) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def mixed_matrix(rho: np.ndarray, lam: float) -> np.ndarray:
    d = rho.shape[0]
    return lam * rho + (1.0 - lam) * np.eye(d) / d


def sample_gh(rng: np.random.Generator, n_qubits: int) -> DensityMatrix:
    d = 2**n_qubits
    h = rng.uniform(-1, 1, (d, d)) + 1j * rng.uniform(-1, 1, (d, d))
    return DensityMatrix(n_qubits, gh_matrix(h))


def sample_z(rng: np.random.Generator, n_qubits: int) -> DensityMatrix:
    d = 2**n_qubits
    eigs = sample_simplex(rng, d)
    v = haar_unitary(rng, d)
    return DensityMatrix(n_qubits, z_matrix(eigs, v))


def mix_identity(rho, rng: np.random.Generator, beta: float, u: Optional[float] = None) -> DensityMatrix:
    """``lambda rho + (1 - lambda) I/d`` with ``lambda = u**beta`` and ``u ~ U[0, 1]``.

    Pass ``u`` to pin the uniform draw (``rng`` is then untouched).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = as_array(rho)
    if u is None:
        u = rng.uniform()
    lam = float(u) ** beta
    return DensityMatrix.from_matrix(mixed_matrix(m, lam))


def sample_prior(spec: PriorSpec, rng: np.random.Generator, n_qubits: int) -> DensityMatrix:
    base = sample_z(rng, n_qubits) if spec.kind == "Z" else sample_gh(rng, n_qubits)
    if spec.mixed:
        return mix_identity(base, rng, spec.beta)
    return base


def sample_prior_stack(spec: PriorSpec, rng: np.random.Generator, n_qubits: int, size: int) -> np.ndarray:
    """``size`` prior draws as a ``(size, d, d)`` array."""
    return np.array([sample_prior(spec, rng, n_qubits).matrix for _ in range(size)])


def _separable(stack: np.ndarray, n_qubits: int, measure: str) -> np.ndarray:
    pairs = negativity_pairs(stack, n_qubits)
    if measure == "n1":
        return pairs[:, 0] <= NEGATIVITY_TOL
    if measure == "n2":
        return pairs[:, 1] <= NEGATIVITY_TOL
    if measure == "both":
        return np.all(pairs <= NEGATIVITY_TOL, axis=1)
    raise ValueError(f"unknown measure {measure!r}")


def calibrate_beta(
    kind: str,
    n_qubits: int,
    rng: np.random.Generator,
    samples: int = 2000,
    measure: str = "n1",
    target: float = 0.5,
    iters: int = 40,
) -> float:
    """Distortion exponent for which a fraction ``target`` of mixed-prior draws has zero ``measure``.

    Uses the fact that each draw's negativity is nonincreasing as more identity
    is mixed in: per draw, bisect the critical weight ``lambda*`` below which
    it is separable.  With ``u`` fixed the draw is separable iff
    ``beta >= log(lambda*) / log(u)``, so the answer is a quantile of that ratio.
    """
    d = 2**n_qubits
    spec = PriorSpec(kind)
    base = sample_prior_stack(spec, rng, n_qubits, samples)
    u = rng.uniform(size=samples)
    eye = np.eye(d) / d

    lo = np.zeros(samples)
    hi = np.ones(samples)
    always_sep = _separable(base, n_qubits, measure)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        stack = mid[:, None, None] * base + (1 - mid)[:, None, None] * eye
        sep = _separable(stack, n_qubits, measure)
        lo = np.where(sep, mid, lo)
        hi = np.where(sep, hi, mid)
    lam_star = np.where(always_sep, 1.0, 0.5 * (lo + hi))
    with np.errstate(divide="ignore"):
        ratio = np.where(always_sep, 0.0, np.log(lam_star) / np.log(u))
    return float(np.quantile(ratio, target))
