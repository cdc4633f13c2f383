"""Click-level detector Monte Carlo and coincidence counting.

Detectors are modeled by an efficiency, a dark-count rate referred to the
coincidence window, and a dead time.  Shot-based sampling treats the photon's
possible destinations as exclusive outcomes; dark counts are independent
per detector and per shot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

DEFAULT_WINDOW_NS = 3.0


@dataclass(frozen=True)
class DetectorModel:
    """Efficiency / dark-count / dead-time description of one detector."""

    efficiency: float = 1.0
    dark_count_rate_hz: float = 0.0
    dead_time_ns: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.dark_count_rate_hz < 0.0:
            raise ValueError("dark_count_rate_hz must be >= 0")
        if self.dead_time_ns < 0.0:
            raise ValueError("dead_time_ns must be >= 0")


@dataclass(frozen=True)
class CountRow:
    """Raw counts accumulated at one experimental setting."""

    setting_id: str
    phi_rad: float
    singles_d1: int
    singles_d2: int
    singles_d3: int
    cc_13: int
    cc_23: int
    shots: int


@dataclass
class CountTable:
    """Ordered collection of per-setting count rows."""

    rows: list[CountRow] = field(default_factory=list)

    def add(self, row: CountRow) -> None:
        self.rows.append(row)

    def to_csv(self) -> str:
        lines = ["setting_id,phi_rad,singles_d1,singles_d2,singles_d3,cc_13,cc_23,shots"]
        for r in self.rows:
            lines.append(f"{r.setting_id},{r.phi_rad!r},{r.singles_d1},{r.singles_d2},"
                         f"{r.singles_d3},{r.cc_13},{r.cc_23},{r.shots}")
        return "\n".join(lines) + "\n"


def poisson_sigma(counts: int | np.ndarray) -> float | np.ndarray:
    """1-sigma statistical uncertainty of a raw count, sqrt(N)."""
    return np.sqrt(counts)


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_clicks(output_probs: Mapping[str, float | np.ndarray],
                  models: Mapping[str, DetectorModel],
                  n_shots: int,
                  seed: int | np.random.Generator,
                  window_ns: float = DEFAULT_WINDOW_NS,
                  shot_period_ns: float | None = None) -> dict[str, np.ndarray]:
    """Draw per-shot clicks for one photon distributed over several detectors.

    ``output_probs`` maps detector name to the probability (scalar or length
    ``n_shots`` array) that the photon arrives there; the outcomes are
    exclusive, so the probabilities must sum to at most one per shot.  Each
    arrival clicks with the detector's efficiency; dark counts fire
    independently with probability ``rate * window``.  A positive dead time
    needs ``shot_period_ns`` to convert shot indices to times.

    Returns a boolean click array per detector.
    """
    rng = _as_rng(seed)
    names = list(output_probs.keys())
    probs = np.zeros((len(names), n_shots), dtype=float)
    for i, name in enumerate(names):
        p = np.broadcast_to(np.asarray(output_probs[name], dtype=float), (n_shots,))
        if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
            raise ValueError(f"probability for {name!r} outside [0, 1]")
        probs[i] = np.clip(p, 0.0, 1.0)
    total = probs.sum(axis=0)
    if np.any(total > 1.0 + 1e-9):
        raise ValueError(f"outcome probabilities sum to {total.max()!r} > 1")

    # exclusive destination draw: one uniform per shot against the cumulative bands
    u = rng.random(n_shots)
    edges = np.cumsum(probs, axis=0)
    lower = np.vstack([np.zeros(n_shots), edges[:-1]]) if len(names) > 1 else np.zeros((1, n_shots))
    clicks: dict[str, np.ndarray] = {}
    for i, name in enumerate(names):
        model = models[name]
        arrived = (u >= lower[i]) & (u < edges[i])
        detected = arrived & (rng.random(n_shots) < model.efficiency)
        p_dark = min(model.dark_count_rate_hz * window_ns * 1e-9, 1.0)
        if p_dark > 0.0:
            detected |= rng.random(n_shots) < p_dark
        if model.dead_time_ns > 0.0:
            if shot_period_ns is None:
                raise ValueError("dead_time_ns > 0 requires shot_period_ns")
            detected = _suppress_dead_time(detected, model.dead_time_ns, shot_period_ns)
        clicks[name] = detected
    return clicks


def _suppress_dead_time(clicks: np.ndarray, dead_time_ns: float,
                        shot_period_ns: float) -> np.ndarray:
    out = clicks.copy()
    idx = np.flatnonzero(clicks)
    last_kept = -math.inf
    for i in idx:
        t = i * shot_period_ns
        if t - last_kept < dead_time_ns:
            out[i] = False
        else:
            last_kept = t
    return out


def apply_dead_time(times_ns: np.ndarray, dead_time_ns: float) -> np.ndarray:
    """Drop timestamps arriving within the dead time of the last kept click."""
    times = np.asarray(times_ns, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("timestamps must be sorted")
    if dead_time_ns <= 0.0:
        return times.copy()
    kept = []
    last = -math.inf
    for t in times:
        if t - last >= dead_time_ns:
            kept.append(t)
            last = t
    return np.array(kept, dtype=float)


def coincide(times_1_ns: np.ndarray, times_2_ns: np.ndarray,
             window_ns: float = DEFAULT_WINDOW_NS) -> np.ndarray:
    """Pair clicks from two timestamp streams within a coincidence window.

    Earliest-first greedy matching; every click is used at most once.
    Returns an array of (index into stream 1, index into stream 2) pairs;
    the coincidence count is its length.
    """
    t1 = np.asarray(times_1_ns, dtype=float)
    t2 = np.asarray(times_2_ns, dtype=float)
    for t in (t1, t2):
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise ValueError("timestamps must be sorted")
    pairs = []
    i = j = 0
    while i < t1.size and j < t2.size:
        dt = t1[i] - t2[j]
        if abs(dt) <= window_ns:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dt < 0:
            i += 1
        else:
            j += 1
    return np.array(pairs, dtype=int).reshape(-1, 2)


def estimate_T_R(cc_13: int | np.ndarray, cc_23: int | np.ndarray) -> tuple:
    """Splitting-ratio estimate from trigger coincidences at the two outputs.

    T_est = cc_13 / (cc_13 + cc_23); R_est is the complement.  The binomial
    1-sigma uncertainty sqrt(T*(1-T)/N) applies to both.  Loss and detector
    efficiency common to both arms cancel in the ratio.
    """
    cc_13 = np.asarray(cc_13)
    cc_23 = np.asarray(cc_23)
    total = cc_13 + cc_23
    if np.any(total <= 0):
        raise ValueError("no coincidences recorded; T/R estimate undefined")
    t_est = cc_13 / total
    sigma = np.sqrt(t_est * (1.0 - t_est) / total)
    if t_est.ndim == 0:
        return float(t_est), float(1.0 - t_est), float(sigma)
    return t_est, 1.0 - t_est, sigma
