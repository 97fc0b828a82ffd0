"""Monte Carlo identification experiments."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from ..channel import apply_channel, draw_channel, impair
from ..detector import Decision, DetectorConfig, FeatureSet, decide_features, extract_features
from ..txchain import transmit
from .config import ExperimentConfig

CSV_COLUMNS = ("scheme", "snr_db", "n_symbols", "p_fa", "n_rx", "impair_kind", "impair_value",
               "trials", "correct", "p_hat", "ci_lo", "ci_hi", "seconds")


@dataclass(frozen=True)
class ResultRecord:
    scheme: str
    snr_db: float
    n_symbols: int
    p_fa: float
    n_rx: int
    impair_kind: str
    impair_value: float
    trials: int
    correct: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    seconds: float | None = None

    def row(self, timing: bool = True) -> list:
        vals = [getattr(self, c) for c in CSV_COLUMNS]
        if not timing or self.seconds is None:
            vals[-1] = ""
        else:
            vals[-1] = f"{self.seconds:.3f}"
        return vals


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return float(lo), float(hi)


def trial_seed(master_seed: int, grid_index: int, trial_index: int) -> np.random.SeedSequence:
    """Decorrelated per-trial seed: SeedSequence hashing of the (master, grid, trial) triple."""
    return np.random.SeedSequence([int(master_seed), int(grid_index), int(trial_index)])


def simulate_rx(cfg: ExperimentConfig, snr_db: float, seed):
    """Synthesize one received observation: transmit, channel, impairments."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # same children as a first ss.spawn(3), without advancing ss
    data_ss, chan_ss, imp_ss = (np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,),
                                                       pool_size=ss.pool_size) for i in range(3))
    params = cfg.params
    tx = transmit(cfg.scheme, cfg.n_symbols, params, seed=np.random.default_rng(data_ss))
    ch = draw_channel(cfg.n_paths, cfg.profile, np.random.default_rng(chan_ss), n_rx=cfg.n_rx)
    rx = apply_channel(tx, ch)
    return impair(rx, cfg.impairments(snr_db), params, np.random.default_rng(imp_ss))


def trial_features(cfg: ExperimentConfig, snr_db: float, seed) -> FeatureSet:
    return extract_features(simulate_rx(cfg, snr_db, seed), cfg.params)


def run_trial(cfg: ExperimentConfig, trial_seed_, snr_db: float | None = None,
              p_false_alarm: float | None = None) -> Decision:
    """Run one seeded trial end to end and return the detector decision.

    Uses the first SNR grid value and false-alarm target unless overridden.
    """
    snr = cfg.snr_grid[0] if snr_db is None else snr_db
    pf = cfg.p_false_alarm[0] if p_false_alarm is None else p_false_alarm
    fs = trial_features(cfg, snr, trial_seed_)
    det = DetectorConfig(p_false_alarm=pf, kappa=cfg.kappa)
    return decide_features(fs, cfg.params, det)


def _trial_labels(args) -> list[str]:
    cfg, snr, grid_index, trial_index = args
    fs = trial_features(cfg, snr, trial_seed(cfg.master_seed, grid_index, trial_index))
    return [decide_features(fs, cfg.params, DetectorConfig(p_false_alarm=pf, kappa=cfg.kappa)).label.value
            for pf in cfg.p_false_alarm]


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_experiment(configs: ExperimentConfig | Sequence[ExperimentConfig],
                   grid_offset: int = 0) -> list[ResultRecord]:
    """Evaluate every (config, SNR) grid point and return one record per false-alarm target.

    Grid points are numbered consecutively across ``configs`` (starting at
    ``grid_offset``) and that index enters every trial seed. Row order follows
    the grid order.
    """
    if isinstance(configs, ExperimentConfig):
        configs = [configs]
    records = []
    grid_index = grid_offset
    for cfg in configs:
        kind, value = cfg.impairment
        for snr in cfg.snr_grid:
            t0 = time.perf_counter()
            jobs = [(cfg, snr, grid_index, t) for t in range(cfg.n_trials)]
            labels = _map(_trial_labels, jobs, cfg.workers)
            elapsed = time.perf_counter() - t0
            for j, pf in enumerate(cfg.p_false_alarm):
                correct = sum(lab[j] == cfg.scheme for lab in labels)
                lo, hi = wilson_interval(correct, cfg.n_trials)
                records.append(ResultRecord(cfg.scheme, snr, cfg.n_symbols, pf, cfg.n_rx, kind, value,
                                            cfg.n_trials, correct, correct / cfg.n_trials, lo, hi, elapsed))
            grid_index += 1
    return records


def format_csv(records: Iterable[ResultRecord], timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.row(timing))
    return buf.getvalue()


def write_csv(records: Iterable[ResultRecord], path, timing: bool = True) -> Path:
    path = Path(path)
    path.write_text(format_csv(records, timing))
    return path
