"""Seeded Monte Carlo sweeps with deterministic CSV output.

Every algorithm requested at a grid point is evaluated on the same channel
realization (paired-sample design), trial seeds derive from
``(master_seed, grid_index, trial)``, and rows are sorted before writing,
so output files are byte-identical for a given spec regardless of worker
count. Floats are serialized with 17 significant digits.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .baselines import evaluate_bd, evaluate_dpc
from .channel import ChannelParams, generate_channel_set
from .config import SystemConfig, Tolerances, make_config
from .dop import IterationTrace, finalize, run_dop
from .errors import EmptyInput
from .hybrid import baseband_mui_cleanup, hybridize
from .metrics import sum_rate
from .seeding import derive_seed

ARCHITECTURES = ("digital", "hybrid")
ALGORITHMS = ("dop", "bd", "dpc")


class ExperimentKind(Enum):
    SWEEP_SNR = "sweep-snr"
    SWEEP_USERS = "sweep-users"
    TRACE_CONVERGENCE = "trace-convergence"
    SINGLE_RUN = "single-run"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    base_config: SystemConfig
    channel_params: ChannelParams
    n_trials: int
    master_seed: int
    snr_grid_db: tuple = ()
    user_grid: tuple = ()
    architectures: tuple = ("digital",)
    algorithms: tuple = ("dop",)
    output_path: str = "results.csv"
    workers: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.kind is ExperimentKind.SWEEP_SNR and not self.snr_grid_db:
            raise ValueError("sweep-snr needs a non-empty snr_grid_db")
        if self.kind is ExperimentKind.SWEEP_USERS and not self.user_grid:
            raise ValueError("sweep-users needs a non-empty user_grid")
        bad = set(self.architectures) - set(ARCHITECTURES)
        if bad or not self.architectures:
            raise ValueError(f"architectures must be a non-empty subset of {ARCHITECTURES}")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        if not _combos(self):
            raise ValueError("no evaluable (architecture, algorithm) combinations: "
                             "hybrid exists only for dop")


@dataclass(frozen=True)
class ResultRow:
    trial: int
    snr_db: float
    n_users: int
    architecture: str
    algorithm: str
    sum_rate_bits: float | None
    feasible: bool
    converged_at: int | None


@dataclass(frozen=True)
class SummaryRow:
    snr_db: float
    n_users: int
    architecture: str
    algorithm: str
    n_rows: int
    n_feasible: int
    mean: float | None
    stderr: float | None
    minimum: float | None
    maximum: float | None
    convergence_histogram: dict | None


def _grid_configs(spec: ExperimentSpec) -> list:
    base = spec.base_config
    if spec.kind is ExperimentKind.SWEEP_SNR:
        return [make_config(snr, base.n_tx, base.n_rx, base.n_users, base.n_streams,
                            base.n_rf_tx, base.n_rf_rx, base.noise_power)
                for snr in spec.snr_grid_db]
    if spec.kind is ExperimentKind.SWEEP_USERS:
        # RF chains track the stream count per the minimal feasible layout.
        return [make_config(base.snr_db, base.n_tx, base.n_rx, users, base.n_streams,
                            users * base.n_streams, base.n_rf_rx, base.noise_power)
                for users in spec.user_grid]
    return [base]


def _combos(spec: ExperimentSpec) -> list:
    combos = []
    for arch in ARCHITECTURES:
        if arch not in spec.architectures:
            continue
        for algo in ALGORITHMS:
            if algo not in spec.algorithms:
                continue
            if arch == "hybrid" and algo != "dop":
                continue  # only the projection algorithm has a hybrid form
            combos.append((arch, algo))
    return combos


def _evaluate_trial(spec: ExperimentSpec, grid_index: int, config: SystemConfig,
                    trial: int) -> tuple:
    trial_seed = derive_seed(spec.master_seed, grid_index, trial)
    params = replace(spec.channel_params, seed=derive_seed(trial_seed, 0))
    channels = generate_channel_set(config, params)
    combos = _combos(spec)
    rows = []
    trace: IterationTrace | None = None
    dop_cache = None
    if any(algo == "dop" for _, algo in combos) or \
            spec.kind is ExperimentKind.TRACE_CONVERGENCE:
        try:
            beamformers, trace = run_dop(channels, config, spec.tolerances,
                                         seed=derive_seed(trial_seed, 1))
            final = finalize(beamformers, config, spec.tolerances)
            digital_rate = sum_rate(channels,
                                    final.precoder_blocks(config.n_streams),
                                    final.combiners, config)
            dop_cache = (final, digital_rate)
        except Exception as exc:  # degenerate realizations must not kill the sweep
            warnings.warn(f"trial {trial} grid {grid_index} dop: {exc}",
                          RuntimeWarning, stacklevel=2)
    for arch, algo in combos:
        rate, feasible, converged = None, True, None
        try:
            if algo == "dop":
                if dop_cache is None:
                    raise RuntimeError("shared run failed for this trial")
                final, digital_rate = dop_cache
                converged = trace.converged_at
                if arch == "digital":
                    rate = digital_rate
                else:
                    hyb = hybridize(final.stacked_precoder, final.combiners, config)
                    hyb = baseband_mui_cleanup(hyb, channels, config, spec.tolerances)
                    rate = sum_rate(channels,
                                    hyb.effective_precoders(config.n_streams),
                                    hyb.effective_combiners(), config)
            elif algo == "bd":
                result = evaluate_bd(channels, config, spec.tolerances)
                rate, feasible = result.sum_rate_bits, result.feasible
            else:
                result = evaluate_dpc(channels, config)
                rate, feasible = result.sum_rate_bits, result.feasible
        except Exception as exc:  # per-trial failures must not kill the sweep
            warnings.warn(f"trial {trial} grid {grid_index} {arch}/{algo}: {exc}",
                          RuntimeWarning, stacklevel=2)
            rate, feasible = None, False
        rows.append(ResultRow(trial=trial, snr_db=config.snr_db,
                              n_users=config.n_users, architecture=arch,
                              algorithm=algo, sum_rate_bits=rate,
                              feasible=feasible, converged_at=converged))
    return grid_index, trial, rows, trace


def _work(args):
    return _evaluate_trial(*args)


def execute(spec: ExperimentSpec) -> tuple[list, list]:
    """Run all grid points and trials; returns (rows, traces).

    ``traces`` is a list of (trial, IterationTrace), populated only for the
    trace-convergence kind.
    """
    configs = _grid_configs(spec)
    items = [(spec, gi, config, trial)
             for gi, config in enumerate(configs)
             for trial in range(spec.n_trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_work, items))
    else:
        outcomes = [_evaluate_trial(*item) for item in items]
    outcomes.sort(key=lambda o: (o[0], o[1]))
    rows = [row for _, _, chunk, _ in outcomes for row in chunk]
    traces = []
    if spec.kind is ExperimentKind.TRACE_CONVERGENCE:
        traces = [(trial, trace) for _, trial, _, trace in outcomes
                  if trace is not None]
    return rows, traces


def run_experiment(spec: ExperimentSpec) -> list:
    """Evaluate the spec and return its deterministic list of result rows."""
    return execute(spec)[0]


def summarize(rows) -> list:
    """Per (grid point, architecture, algorithm) statistics over trials."""
    rows = list(rows)
    if not rows:
        raise EmptyInput("no result rows to summarize")
    groups: dict = {}
    for row in rows:
        key = (row.snr_db, row.n_users, row.architecture, row.algorithm)
        groups.setdefault(key, []).append(row)
    summary = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        members = groups[key]
        rates = np.array([r.sum_rate_bits for r in members
                          if r.sum_rate_bits is not None])
        feasible = sum(1 for r in members if r.feasible)
        if rates.size:
            mean = float(rates.mean())
            stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
            lo, hi = float(rates.min()), float(rates.max())
        else:
            mean = stderr = lo = hi = None
        hist = None
        if key[3] == "dop":
            hist = {}
            for r in members:
                label = str(r.converged_at) if r.converged_at is not None else "none"
                hist[label] = hist.get(label, 0) + 1
        summary.append(SummaryRow(snr_db=key[0], n_users=key[1], architecture=key[2],
                                  algorithm=key[3], n_rows=len(members),
                                  n_feasible=feasible, mean=mean, stderr=stderr,
                                  minimum=lo, maximum=hi, convergence_histogram=hist))
    return summary


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "snr_db", "n_users", "architecture", "algorithm",
                         "sum_rate_bits", "feasible", "converged_at"])
        for r in rows:
            writer.writerow([_fmt(r.trial), _fmt(r.snr_db), _fmt(r.n_users),
                             r.architecture, r.algorithm, _fmt(r.sum_rate_bits),
                             _fmt(r.feasible), _fmt(r.converged_at)])


def write_summary_csv(summary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["snr_db", "n_users", "architecture", "algorithm", "n_rows",
                         "n_feasible", "mean_sum_rate_bits", "stderr_sum_rate_bits",
                         "min_sum_rate_bits", "max_sum_rate_bits",
                         "convergence_histogram"])
        for s in summary:
            hist = ""
            if s.convergence_histogram is not None:
                keys = sorted(s.convergence_histogram,
                              key=lambda k: (k == "none", int(k) if k != "none" else 0))
                hist = ";".join(f"{k}:{s.convergence_histogram[k]}" for k in keys)
            writer.writerow([_fmt(s.snr_db), _fmt(s.n_users), s.architecture,
                             s.algorithm, _fmt(s.n_rows), _fmt(s.n_feasible),
                             _fmt(s.mean), _fmt(s.stderr), _fmt(s.minimum),
                             _fmt(s.maximum), hist])


def write_trace_csv(trace: IterationTrace, path) -> None:
    """One row per (iteration, user) with the recorded link diagnostics."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "user", "rate_bits", "signal_power",
                         "noise_power", "mui_power"])
        for record in trace.per_iteration:
            for u, report in enumerate(record.per_user):
                writer.writerow([record.iteration, u, _fmt(report.rate_bits),
                                 _fmt(report.signal_power), _fmt(report.noise_power),
                                 _fmt(report.mui_power)])
