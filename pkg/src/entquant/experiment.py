"""Sweeps over M, trials and priors, with per-cell files and a report built only from those files.

Layout of an output directory::

    manifest.json
    cells/m<M>/t<trial>/record.csv
    cells/m<M>/t<trial>/chain_<label>.csv + .json
    cells/m<M>/t<trial>/bootstrap.csv + .json
    summaries.csv  sweep.csv  criteria.json  fits.json   (written by build_report)

A cell counts as done when its JSON metadata exists; metadata is written last.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import platform
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .criteria import (
    MEASURES,
    CriterionReport,
    PosteriorSummary,
    combine_trials,
    criterion_1,
    criterion_1_5,
    fit_power_law,
    sufficient_m,
    summarize,
)
from .entanglement import bell_state, negativity_pair, smolin_state, w_noise_state
from .inference import bootstrap_negativity, linear_inversion, mle_estimate
from .povm import MeasurementRecord, SicPovm, simulate_counts
from .priors import PriorSpec
from .qstate import DensityMatrix, is_physical
from .sampler import ChainConfig, PosteriorChain, mh_chain

log = logging.getLogger(__name__)

MLE_SOURCE = "MLE_BOOTSTRAP"
_ROLE_RECORD = 0
_ROLE_BOOTSTRAP = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the offending field path."""


def derive_seed(master: int, m: int, trial: int, role: str | int) -> int:
    """Seed for one (M, trial, role) cell, independent of which other cells exist."""
    code = role if isinstance(role, int) else 1000 + zlib.crc32(role.encode())
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(m), int(trial), int(code)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def state_spec(text: str) -> dict:
    """``"w_noise:0.6"`` -> ``{"kind": "w_noise", "q": 0.6}``; ``"file:<path>"`` keeps the path."""
    kind, _, arg = text.partition(":")
    spec = {"kind": kind}
    if kind == "file":
        spec["path"] = arg
    elif arg:
        try:
            spec["q"] = float(arg)
        except ValueError as exc:
            raise ConfigError(f"true_state: {exc}") from exc
    return spec


def parse_state(spec: dict | str, n_qubits: int) -> DensityMatrix:
    """Build the true state from ``{"kind": "w_noise", "q": 0.6}``-style specs or ``"w_noise:0.6"``."""
    if isinstance(spec, str):
        spec = state_spec(spec)
    kind = spec.get("kind")
    if kind == "w_noise":
        return w_noise_state(float(spec["q"]), n_qubits)
    if kind == "smolin":
        if n_qubits != 4:
            raise ConfigError("true_state: the Smolin state is defined on 4 qubits")
        return smolin_state()
    if kind == "bell":
        if n_qubits != 2:
            raise ConfigError("true_state: the Bell state is defined on 2 qubits")
        q = float(spec.get("q", 1.0))
        bell = bell_state("phi+").matrix
        return DensityMatrix.from_matrix(q * bell + (1 - q) * np.eye(4) / 4)
    if kind == "file":
        rho = DensityMatrix.from_json(Path(spec["path"]).read_text())
        if rho.n_qubits != n_qubits:
            raise ConfigError(f"true_state.path: file holds {rho.n_qubits} qubits, config says {n_qubits}")
        return rho
    raise ConfigError(f"true_state.kind: unknown state kind {kind!r}")


@dataclass
class ExperimentConfig:
    true_state: dict = field(default_factory=lambda: {"kind": "w_noise", "q": 0.6})
    n_qubits: int = 4
    m_values: list = field(default_factory=lambda: [10_000, 100_000, 1_000_000])
    priors: list = field(default_factory=lambda: [PriorSpec("Z"), PriorSpec("GH")])
    chain: ChainConfig = field(default_factory=ChainConfig)
    bootstrap_resamples: int = 100
    trials_per_m: int = 10
    seed: int = 0
    output_dir: str = "runs/default"
    workers: int = 1
    width: float = 1.0

    def validate(self):
        for name in ("n_qubits", "trials_per_m", "bootstrap_resamples", "workers", "seed"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ConfigError(f"{name}: must be an integer, got {value!r}")
        if not isinstance(self.width, (int, float)) or isinstance(self.width, bool):
            raise ConfigError(f"width: must be a number, got {self.width!r}")
        if self.n_qubits < 2:
            raise ConfigError("n_qubits: must be >= 2")
        if not self.m_values or any(int(m) < 1 for m in self.m_values):
            raise ConfigError("m_values: must be a nonempty list of positive integers")
        if any(b <= a for a, b in zip(self.m_values, self.m_values[1:])):
            raise ConfigError("m_values: must be strictly increasing")
        if self.trials_per_m < 1:
            raise ConfigError("trials_per_m: must be >= 1")
        if self.bootstrap_resamples < 2:
            raise ConfigError("bootstrap_resamples: must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if not self.width > 0:
            raise ConfigError("width: must be positive")
        labels = [p.label for p in self.priors]
        if len(set(labels)) != len(labels):
            raise ConfigError("priors: duplicate prior labels")
        try:
            parse_state(self.true_state, self.n_qubits)
        except ConfigError:
            raise
        except (KeyError, ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"true_state: {exc}") from exc
        return self

    def to_dict(self) -> dict:
        return {
            "true_state": dict(self.true_state),
            "n_qubits": self.n_qubits,
            "m_values": [int(m) for m in self.m_values],
            "priors": [p.to_dict() for p in self.priors],
            "chain": self.chain.to_dict(),
            "bootstrap_resamples": self.bootstrap_resamples,
            "trials_per_m": self.trials_per_m,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "workers": self.workers,
            "width": self.width,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown configuration key")
        kw = dict(data)
        if isinstance(kw.get("true_state"), str):
            kw["true_state"] = state_spec(kw["true_state"])
        converters = {
            "priors": lambda ps: [PriorSpec.parse(p) if isinstance(p, str) else PriorSpec.from_dict(p) for p in ps],
            "chain": ChainConfig.from_dict,
            "m_values": lambda ms: [int(m) for m in ms],
        }
        for key, convert in converters.items():
            if key in kw:
                try:
                    kw[key] = convert(kw[key])
                except (KeyError, ValueError, TypeError) as exc:
                    raise ConfigError(f"{key}: {exc}") from exc
        return cls(**kw).validate()

    def hash(self) -> str:
        payload = self.to_dict()
        # execution-only settings do not change results
        payload.pop("workers")
        payload.pop("output_dir")
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _cell_dir(root: Path, m: int, trial: int) -> Path:
    return root / "cells" / f"m{m}" / f"t{trial}"


def _record_for(cfg: ExperimentConfig, rho: DensityMatrix, povm: SicPovm, m: int, trial: int) -> MeasurementRecord:
    rng = np.random.default_rng(derive_seed(cfg.seed, m, trial, _ROLE_RECORD))
    return simulate_counts(rho, povm, m, rng)


def _run_cell(args) -> str:
    cfg, m, trial, source = args
    root = Path(cfg.output_dir)
    cell = _cell_dir(root, m, trial)
    rho = parse_state(cfg.true_state, cfg.n_qubits)
    povm = SicPovm(cfg.n_qubits)
    record = _record_for(cfg, rho, povm, m, trial)
    rec_path = cell / "record.csv"
    if not rec_path.exists():
        _atomic_write(rec_path, record.to_csv())

    if source == MLE_SOURCE:
        rng = np.random.default_rng(derive_seed(cfg.seed, m, trial, _ROLE_BOOTSTRAP))
        est = mle_estimate(record, povm)
        pairs = bootstrap_negativity(est, povm, m, cfg.bootstrap_resamples, rng)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["resample", "n1", "n2"])
        for i, (a, b) in enumerate(pairs):
            w.writerow([i, repr(a), repr(b)])
        _atomic_write(cell / "bootstrap.csv", buf.getvalue())
        n_mle = negativity_pair(est)
        meta = {
            "m": m,
            "trial": trial,
            "resamples": cfg.bootstrap_resamples,
            "tomo_physical": is_physical(linear_inversion(record, povm)),
            "n1_mle": n_mle.n1,
            "n2_mle": n_mle.n2,
            "rho_mle": est.to_dict(),
        }
        _atomic_write(cell / "bootstrap.json", json.dumps(meta, indent=2, sort_keys=True))
        return f"m={m} trial={trial} bootstrap"

    prior = next(p for p in cfg.priors if p.label == source)
    chain_cfg = replace(cfg.chain, seed=derive_seed(cfg.seed, m, trial, source))
    chain = mh_chain(prior, record, povm, chain_cfg)
    _atomic_write(cell / f"chain_{source}.csv", chain.to_csv())
    _atomic_write(cell / f"chain_{source}.json", chain.metadata_json())
    return f"m={m} trial={trial} {source} acceptance={chain.acceptance_rate:.3f}"


def _cell_done(root: Path, m: int, trial: int, source: str) -> bool:
    cell = _cell_dir(root, m, trial)
    if source == MLE_SOURCE:
        return (cell / "bootstrap.json").exists()
    return (cell / f"chain_{source}.json").exists()


def manifest(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "versions": {
            "entquant": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every missing (M, trial, source) cell, then rebuild the report from disk."""
    cfg.validate()
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    man_path = root / "manifest.json"
    if man_path.exists():
        old = json.loads(man_path.read_text())
        if old.get("config_hash") != cfg.hash():
            raise ConfigError("output_dir: holds results of a different configuration")
    _atomic_write(man_path, json.dumps(manifest(cfg), indent=2, sort_keys=True))

    sources = [p.label for p in cfg.priors] + [MLE_SOURCE]
    todo = [
        (cfg, m, t, s)
        for m in cfg.m_values
        for t in range(cfg.trials_per_m)
        for s in sources
        if not _cell_done(root, m, t, s)
    ]
    log.info("%d cells to run (%d already done)", len(todo), len(cfg.m_values) * cfg.trials_per_m * len(sources) - len(todo))
    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            for msg in pool.map(_run_cell, todo):
                log.info(msg)
    else:
        for job in todo:
            log.info(_run_cell(job))
    return build_report(root)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _read_chain_summary(path: Path, source: str, m: int) -> tuple[PosteriorSummary, dict]:
    chain = PosteriorChain.from_files(path.with_suffix(".csv").read_text(), path.read_text())
    samples = np.column_stack([chain.n1, chain.n2])
    return summarize(samples, source, m), chain.metadata()


def _read_bootstrap_summary(cell: Path, m: int) -> tuple[PosteriorSummary, dict]:
    rows = list(csv.reader(io.StringIO((cell / "bootstrap.csv").read_text())))[1:]
    samples = np.array([[float(r[1]), float(r[2])] for r in rows])
    return summarize(samples, MLE_SOURCE, m), json.loads((cell / "bootstrap.json").read_text())


def build_report(root: Path | str) -> dict:
    """Summaries, criteria and power-law fits computed from the stored cell files only."""
    root = Path(root)
    man = json.loads((root / "manifest.json").read_text())
    cfg_d = man["config"]
    width = float(cfg_d.get("width", 1.0))
    labels = [PriorSpec.from_dict(p).label for p in cfg_d["priors"]]
    kinds = {PriorSpec.from_dict(p).label: PriorSpec.from_dict(p).kind for p in cfg_d["priors"]}
    z_label = next((l for l in labels if kinds[l] == "Z"), None)
    gh_label = next((l for l in labels if kinds[l] == "GH"), None)

    summaries: dict[tuple[int, int, str], PosteriorSummary] = {}
    acceptance: dict[tuple[int, int, str], float] = {}
    for m in cfg_d["m_values"]:
        for t in range(cfg_d["trials_per_m"]):
            cell = _cell_dir(root, m, t)
            for lab in labels:
                p = cell / f"chain_{lab}.json"
                if p.exists():
                    s, meta = _read_chain_summary(p, lab, m)
                    summaries[(m, t, lab)] = s
                    acceptance[(m, t, lab)] = meta["acceptance_rate"]
            if (cell / "bootstrap.json").exists():
                summaries[(m, t, MLE_SOURCE)] = _read_bootstrap_summary(cell, m)[0]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "trial", "source", "mean_n1", "err_n1", "mean_n2", "err_n2", "acceptance_rate"])
    for (m, t, src), s in sorted(summaries.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        acc = acceptance.get((m, t, src), "")
        w.writerow([m, t, src] + [_fmt(v) for v in (s.mean_n1, s.err_n1, s.mean_n2, s.err_n2)] + [_fmt(acc)])
    _atomic_write(root / "summaries.csv", buf.getvalue())

    pairs = []
    if z_label and gh_label:
        pairs.append(("C1", z_label, gh_label))
    for lab in labels:
        pairs.append(("C1_5", lab, MLE_SOURCE))

    combined: dict[tuple[str, str, str, str], list[CriterionReport]] = {}
    sweep_rows = []
    for which, a, b in pairs:
        fn = criterion_1 if which == "C1" else criterion_1_5
        for measure in MEASURES:
            series = []
            for m in cfg_d["m_values"]:
                per_trial = [
                    fn(summaries[(m, t, a)], summaries[(m, t, b)], measure, width)
                    for t in range(cfg_d["trials_per_m"])
                    if (m, t, a) in summaries and (m, t, b) in summaries
                ]
                if not per_trial:
                    continue
                rep = combine_trials(per_trial)
                series.append(rep)
                sweep_rows.append((m, which, measure, a, b, rep.gap, rep.budget, rep.satisfied, len(per_trial)))
            combined[(which, measure, a, b)] = series

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "criterion", "measure", "source_a", "source_b", "gap", "budget", "satisfied", "trials"])
    for row in sweep_rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(root / "sweep.csv", buf.getvalue())

    criteria_out = []
    for (which, measure, a, b), series in combined.items():
        criteria_out.append(
            {
                "criterion": which,
                "measure": measure,
                "sources": [a, b],
                "sufficient_m": sufficient_m(series) if series else None,
                "reports": [r.to_dict() for r in series],
            }
        )
    _atomic_write(root / "criteria.json", json.dumps(criteria_out, indent=2, sort_keys=True))

    fits = {}
    for (which, measure, a, b), series in combined.items():
        pts = [(r.m, r.gap) for r in series if r.gap > 0]
        if len({p[0] for p in pts}) >= 2:
            c, alpha = fit_power_law(pts)
            fits[f"gap:{which}:{measure}:{a}-{b}"] = {"c": c, "alpha": alpha}
    for src in labels + [MLE_SOURCE]:
        for measure in MEASURES:
            pts = []
            for m in cfg_d["m_values"]:
                errs = [summaries[(m, t, src)].err(measure) for t in range(cfg_d["trials_per_m"]) if (m, t, src) in summaries]
                if errs and np.mean(errs) > 0:
                    pts.append((m, float(np.mean(errs))))
            if len(pts) >= 2:
                c, alpha = fit_power_law(pts)
                fits[f"err:{src}:{measure}"] = {"c": c, "alpha": alpha}
    _atomic_write(root / "fits.json", json.dumps(fits, indent=2, sort_keys=True))

    return {"summaries": len(summaries), "criteria": criteria_out, "fits": fits}
