"""Metropolis-Hastings random walk over the prior's parameter space.

Each prior is the image of a uniform measure on some parameter space (the
box of GH entries, or simplex x Haar unitary group for Z, times the mixing
variable ``u`` for identity-mixed priors).  Walking with a symmetric proposal
in that space and accepting with the likelihood ratio alone therefore samples
the posterior under that prior.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .entanglement import NegativityPair, negativity_pairs
from .inference import log_likelihood_from_probs, mle_estimate
from .povm import MeasurementRecord, SicPovm
from .priors import PriorSpec, gh_matrix, haar_unitary, mixed_matrix, sample_simplex, z_matrix

ADAPT_UP = 1.1
ADAPT_DOWN = 0.9


class ChainDiagnosticError(RuntimeError):
    """The chain never moved after burn-in."""


@dataclass(frozen=True)
class ChainConfig:
    """Run length, adaptation and seeding for one chain.

    ``initial_step_size=None`` picks a scale from the record size.  ``start``
    is ``"prior"`` (a random prior draw) or ``"mle"`` (the clipped
    linear-inversion estimate, mapped into parameter space).
    """

    total_steps: int = 100_000
    burn_in: int = 1_000
    thinning: int = 10
    target_acceptance: tuple[float, float] = (0.35, 0.40)
    initial_step_size: Optional[float] = None
    seed: int = 0
    adapt_every: int = 100
    start: str = "prior"

    def __post_init__(self):
        object.__setattr__(self, "target_acceptance", tuple(float(x) for x in self.target_acceptance))
        lo, hi = self.target_acceptance
        if self.total_steps < 1 or self.thinning < 1 or self.adapt_every < 1:
            raise ValueError("total_steps, thinning and adapt_every must be positive")
        if not 0 <= self.burn_in < self.total_steps:
            raise ValueError("burn_in must be nonnegative and below total_steps")
        if not 0 < lo <= hi < 1:
            raise ValueError("target_acceptance must be an interval inside (0, 1)")
        if self.initial_step_size is not None and self.initial_step_size <= 0:
            raise ValueError("initial_step_size must be positive")
        if self.start not in ("prior", "mle"):
            raise ValueError(f"unknown start {self.start!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target_acceptance"] = list(self.target_acceptance)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ChainConfig":
        data = dict(data)
        if "target_acceptance" in data:
            data["target_acceptance"] = tuple(data["target_acceptance"])
        return cls(**data)


def default_step_size(total_m: int) -> float:
    return float(min(0.3, 3.0 / np.sqrt(max(total_m, 1))))


def acceptance_probability(delta_log_likelihood: float) -> float:
    """Metropolis rule ``min(1, L'/L)`` from the log-likelihood difference."""
    if delta_log_likelihood >= 0:
        return 1.0
    return float(np.exp(delta_log_likelihood))


def adapt_step_size(accepted, step_size: float, window: tuple[float, float]) -> float:
    """Multiplicative update from the accept/reject history of the last window.

    Above the window the step grows by 10%, below it shrinks by 10%.
    """
    rate = float(np.mean(accepted))
    lo, hi = window
    if rate > hi:
        return step_size * ADAPT_UP
    if rate < lo:
        return step_size * ADAPT_DOWN
    return step_size


def _fold(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Reflect ``x`` back into ``[lo, hi]`` (repeated mirror images)."""
    width = hi - lo
    y = np.mod(x - lo, 2 * width)
    return lo + np.where(y > width, 2 * width - y, y)


def _gue(rng: np.random.Generator, d: int) -> np.ndarray:
    a = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
    return (a + a.conj().T) / np.sqrt(2)


class _Walker:
    """Point in a prior's parameter space plus its symmetric proposal."""

    def __init__(self, spec: PriorSpec, d: int):
        self.spec = spec
        self.d = d
        self.u = 1.0

    def _mix(self, rho: np.ndarray, u: float) -> np.ndarray:
        if not self.spec.mixed:
            return rho
        return mixed_matrix(rho, u**self.spec.beta)

    def _propose_u(self, rng, s) -> float:
        if not self.spec.mixed:
            return self.u
        return float(_fold(self.u + s * rng.standard_normal(), 0.0, 1.0))


class _GHWalker(_Walker):
    def init_random(self, rng):
        d = self.d
        self.h = rng.uniform(-1, 1, (d, d)) + 1j * rng.uniform(-1, 1, (d, d))
        if self.spec.mixed:
            self.u = rng.uniform()

    def init_state(self, rho: np.ndarray):
        w, v = np.linalg.eigh(rho)
        root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        scale = max(np.abs(root.real).max(), np.abs(root.imag).max())
        self.h = 0.5 * root / scale
        self.u = 0.999

    def propose(self, rng, s):
        d = self.d
        step = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = self.h + s * step
        h = _fold(h.real, -1.0, 1.0) + 1j * _fold(h.imag, -1.0, 1.0)
        return (h, self._propose_u(rng, s))

    def accept(self, params):
        self.h, self.u = params

    def state(self, params=None) -> np.ndarray:
        h, u = params if params is not None else (self.h, self.u)
        return self._mix(gh_matrix(h), u)


class _ZWalker(_Walker):
    def init_random(self, rng):
        self.e = sample_simplex(rng, self.d)
        self.v = haar_unitary(rng, self.d)
        if self.spec.mixed:
            self.u = rng.uniform()
        self._moves = 0

    def init_state(self, rho: np.ndarray):
        w, v = np.linalg.eigh(rho)
        w = np.clip(w, 1e-6, None)
        self.e = w / w.sum()
        self.v = v
        self.u = 0.999
        self._moves = 0

    def propose(self, rng, s):
        d = self.d
        jitter = rng.standard_normal(d) * (s / d)
        e = self.e + (jitter - jitter.mean())
        if np.any(e < 0):
            # outside the simplex: zero prior density, always rejected
            return None
        v = expm(1j * s * _gue(rng, d)) @ self.v
        return (e, v, self._propose_u(rng, s))

    def accept(self, params):
        self.e, self.v, self.u = params
        self._moves += 1
        if self._moves % 1000 == 0:
            x, _, y = np.linalg.svd(self.v)
            self.v = x @ y

    def state(self, params=None) -> np.ndarray:
        e, v, u = params if params is not None else (self.e, self.v, self.u)
        return self._mix(z_matrix(e, v), u)


def _walker(spec: PriorSpec, d: int) -> _Walker:
    return _ZWalker(spec, d) if spec.kind == "Z" else _GHWalker(spec, d)


@dataclass
class PosteriorChain:
    """Thinned post-burn-in negativities of one Metropolis-Hastings run."""

    prior: PriorSpec
    config: ChainConfig
    steps: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    log_likelihood: np.ndarray
    step_size_trace: np.ndarray
    acceptance_rate: float
    burn_in_acceptance: float
    final_step_size: float
    initial_log_likelihood: float
    total_m: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[NegativityPair]:
        return [NegativityPair(float(a), float(b)) for a, b in zip(self.n1, self.n2)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step_index", "n1", "n2", "log_likelihood"])
        for row in zip(self.steps, self.n1, self.n2, self.log_likelihood):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "prior": self.prior.to_dict(),
            "prior_label": self.prior.label,
            "total_m": self.total_m,
            "acceptance_rate": self.acceptance_rate,
            "burn_in_acceptance": self.burn_in_acceptance,
            "final_step_size": self.final_step_size,
            "initial_log_likelihood": self.initial_log_likelihood,
            "n_samples": int(len(self.n1)),
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), indent=2, sort_keys=True)

    @classmethod
    def from_files(cls, csv_text: str, meta_text: str) -> "PosteriorChain":
        meta = json.loads(meta_text)
        rows = list(csv.reader(io.StringIO(csv_text)))[1:]
        arr = np.array([[float(x) for x in r] for r in rows]).reshape(-1, 4)
        cfg = ChainConfig.from_dict(meta["config"])
        return cls(
            prior=PriorSpec.from_dict(meta["prior"]),
            config=cfg,
            steps=arr[:, 0].astype(int),
            n1=arr[:, 1],
            n2=arr[:, 2],
            log_likelihood=arr[:, 3],
            step_size_trace=np.full(len(arr), meta["final_step_size"]),
            acceptance_rate=meta["acceptance_rate"],
            burn_in_acceptance=meta["burn_in_acceptance"],
            final_step_size=meta["final_step_size"],
            initial_log_likelihood=meta["initial_log_likelihood"],
            total_m=meta.get("total_m", 0),
        )


def mh_chain(
    prior: PriorSpec,
    record: MeasurementRecord,
    povm: SicPovm,
    config: ChainConfig,
    chunk: int = 512,
) -> PosteriorChain:
    """Sample the posterior over states given ``record`` under ``prior``.

    Steps ``1..burn_in`` adapt the proposal scale every ``config.adapt_every``
    steps toward ``config.target_acceptance``; afterwards the scale is frozen
    and every ``thinning``-th state is kept.
    """
    if record.n_qubits != povm.n_qubits:
        raise ValueError(f"record has {record.n_qubits} qubits, POVM has {povm.n_qubits}")
    rng = np.random.default_rng(config.seed)
    n, d = povm.n_qubits, povm.dim

    seen = record.counts > 0
    a_seen = np.ascontiguousarray(povm.analysis_matrix[seen])
    c_seen = record.counts[seen]

    def loglik(rho: np.ndarray) -> float:
        p = (a_seen @ rho.ravel()).real
        return log_likelihood_from_probs(p, c_seen) if c_seen.size else 0.0

    walker = _walker(prior, d)
    if config.start == "mle" and record.total_m > 0:
        walker.init_state(mle_estimate(record, povm).matrix)
    else:
        walker.init_random(rng)
    rho = walker.state()
    ll = loglik(rho)
    initial_ll = ll

    s = config.initial_step_size or default_step_size(record.total_m)
    window = []
    late_scales = []
    burn_accepts = 0
    post_accepts = 0

    kept_steps, kept_ll, kept_s, pairs = [], [], [], []
    buffer = []

    for step in range(1, config.total_steps + 1):
        params = walker.propose(rng, s)
        accepted = False
        if params is not None:
            cand = walker.state(params)
            cand_ll = loglik(cand)
            if cand_ll != -np.inf:
                delta = cand_ll - ll
                if delta >= 0 or rng.uniform() < acceptance_probability(delta):
                    accepted = True
                    walker.accept(params)
                    rho, ll = cand, cand_ll

        if step <= config.burn_in:
            burn_accepts += accepted
            window.append(accepted)
            if len(window) == config.adapt_every:
                s = adapt_step_size(window, s, config.target_acceptance)
                window = []
                if 2 * step > config.burn_in:
                    late_scales.append(s)
            if step == config.burn_in and late_scales:
                # freeze at the geometric mean of the late-burn-in scales to damp window noise
                s = float(np.exp(np.mean(np.log(late_scales))))
            continue

        post_accepts += accepted
        if (step - config.burn_in) % config.thinning == 0:
            kept_steps.append(step)
            kept_ll.append(ll)
            kept_s.append(s)
            buffer.append(rho)
            if len(buffer) == chunk:
                pairs.append(negativity_pairs(np.array(buffer), n))
                buffer = []
    if buffer:
        pairs.append(negativity_pairs(np.array(buffer), n))

    n_post = config.total_steps - config.burn_in
    if post_accepts == 0:
        raise ChainDiagnosticError(
            f"no proposal accepted in {n_post} post-burn-in steps (step size {s:.3g})"
        )
    if not kept_steps:
        raise ChainDiagnosticError("thinning left no samples; increase total_steps")

    pairs = np.vstack(pairs)
    return PosteriorChain(
        prior=prior,
        config=config,
        steps=np.array(kept_steps),
        n1=pairs[:, 0],
        n2=pairs[:, 1],
        log_likelihood=np.array(kept_ll),
        step_size_trace=np.array(kept_s),
        acceptance_rate=post_accepts / n_post,
        burn_in_acceptance=burn_accepts / config.burn_in if config.burn_in else float("nan"),
        final_step_size=float(s),
        initial_log_likelihood=float(initial_ll),
        total_m=record.total_m,
    )
