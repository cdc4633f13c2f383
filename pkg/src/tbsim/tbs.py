"""The tunable beam splitter: a Mach-Zehnder with paired phase modulators.

Driving the two modulator crystals with equal and opposite voltages puts a
phase ``+phi/2`` on one arm and ``-phi/2`` on the other (per polarization
component, with opposite signs for ``+`` and ``-``).  The interferometer then
routes an input photon from path ``a`` to output ``f`` with probability
``cos^2(phi/2)`` and to output ``e`` with probability ``sin^2(phi/2)``,
independent of polarization.

Two closed forms are provided:

* :func:`tbs_closed_form` reproduces a conventional reference expression with
  branch phase factors ``exp(i*(3*pi/2 - phi/2))`` on ``e`` and
  ``exp(i*(pi/2 + phi/2))`` on ``f``.  Those two factors differ by a
  phi-dependent amount, which no lossless element network can realize: for
  any beam-splitter convention the e/f amplitude ratio is a Moebius function
  of ``exp(i*phi)``, while this form's ratio is ``-cot(phi/2)*exp(i*phi)``.
  It is kept verbatim because the magnitudes and polarization structure are
  the physically meaningful content, and every intensity-level prediction
  below uses only those.
* :func:`tbs_network_form` is the state actually produced by composing the
  elements under this package's conventions; it matches
  :func:`tbs_composed` to machine precision, and matches
  :func:`tbs_closed_form` per output port up to a port-local phase.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import detection
from .elements import EomSetting, SplittingRatio, beam_splitter, eom, mirror
from .modes import FULL_BASIS, ModeLabel, ModeState, Path, Pol, TransferMatrix, compose

INPUT_NORM_TOL = 1e-9


class FitError(RuntimeError):
    """Raised when fringe data cannot support a visibility fit."""


@dataclass(frozen=True)
class TbsOutput:
    """Output amplitudes of the tunable beam splitter on paths e and f."""

    e_plus: complex
    e_minus: complex
    f_plus: complex
    f_minus: complex

    def to_state(self) -> ModeState:
        return ModeState.from_dict({
            ModeLabel(Path.E, Pol.PLUS): self.e_plus,
            ModeLabel(Path.E, Pol.MINUS): self.e_minus,
            ModeLabel(Path.F, Pol.PLUS): self.f_plus,
            ModeLabel(Path.F, Pol.MINUS): self.f_minus,
        })

    def reflected_probability(self) -> float:
        return float(abs(self.e_plus) ** 2 + abs(self.e_minus) ** 2)

    def transmitted_probability(self) -> float:
        return float(abs(self.f_plus) ** 2 + abs(self.f_minus) ** 2)


@dataclass(frozen=True)
class InterferenceQuality:
    """Mode-overlap factor limiting the fringe contrast (1 = perfect)."""

    mode_overlap: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.mode_overlap <= 1.0:
            raise ValueError(f"mode_overlap must be in [0, 1], got {self.mode_overlap}")


@dataclass(frozen=True)
class FringePoint:
    """One phase setting of a fringe scan with its estimated splitting ratio."""

    phi_rad: float
    t_est: float
    r_est: float
    sigma: float
    shots: int = 0
    coincidences: int = 0


@dataclass(frozen=True)
class VisibilityFit:
    """Result of fitting R(phi) = c0 + c1*cos(phi - phi0)."""

    visibility: float
    uncertainty: float
    phase_offset_rad: float


def _check_input(alpha: complex, beta: complex) -> None:
    n2 = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(n2 - 1.0) > INPUT_NORM_TOL:
        raise ValueError(f"input polarization must be normalized, |a|^2+|b|^2 = {n2!r}")


def tbs_closed_form(alpha: complex, beta: complex, phi: float) -> TbsOutput:
    """Reference closed-form output for input ``(alpha|+> + beta|->)`` on path a.

    Port e carries ``sin(phi/2) * exp(i*(3*pi/2 - phi/2)) * (alpha, -beta)``,
    port f carries ``cos(phi/2) * exp(i*(pi/2 + phi/2)) * (alpha, beta)``.
    See the module docstring for how its branch phases relate to the element
    network.
    """
    _check_input(alpha, beta)
    e_factor = math.sin(phi / 2.0) * np.exp(1j * (1.5 * math.pi - phi / 2.0))
    f_factor = math.cos(phi / 2.0) * np.exp(1j * (0.5 * math.pi + phi / 2.0))
    return TbsOutput(
        e_plus=complex(e_factor * alpha),
        e_minus=complex(e_factor * -beta),
        f_plus=complex(f_factor * alpha),
        f_minus=complex(f_factor * beta),
    )


def tbs_network_form(alpha: complex, beta: complex, phi: float) -> TbsOutput:
    """Closed form of the composed element network (common branch phase i)."""
    _check_input(alpha, beta)
    s = 1j * math.sin(phi / 2.0)
    c = 1j * math.cos(phi / 2.0)
    return TbsOutput(
        e_plus=complex(s * alpha),
        e_minus=complex(s * -beta),
        f_plus=complex(c * alpha),
        f_minus=complex(c * beta),
    )


def tbs_composed(phi: float) -> TransferMatrix:
    """Build the full interferometer by composing its elements.

    Chain: 50:50 splitter (a,b)->(c,d), modulators at +phi on c and -phi on d,
    folding mirrors, 50:50 splitter (c,d)->(e,f).
    """
    half = SplittingRatio(0.5)
    chain = [
        beam_splitter(half, (Path.A, Path.B), (Path.C, Path.D)),
        eom(EomSetting(phi, polarity=+1), Path.C),
        eom(EomSetting(phi, polarity=-1), Path.D),
        mirror(Path.C),
        mirror(Path.D),
        beam_splitter(half, (Path.C, Path.D), (Path.E, Path.F)),
    ]
    total = chain[0]
    for element in chain[1:]:
        total = compose(total, element)
    return total


def transmissivity(phi: float) -> float:
    """Probability of an input-a photon exiting through port f."""
    return math.cos(phi / 2.0) ** 2


def reflectivity(phi: float) -> float:
    """Probability of an input-a photon exiting through port e."""
    return math.sin(phi / 2.0) ** 2


def fringe_probability(phi: float | np.ndarray, quality: InterferenceQuality) -> float | np.ndarray:
    """Reflected-port probability of a fringe with imperfect contrast.

    R(phi) = 0.5 * (1 - V*cos(phi)); at V = 1 this equals sin^2(phi/2).
    """
    return 0.5 * (1.0 - quality.mode_overlap * np.cos(phi))


def _scan_point(phi: float, point_index: int, quality: InterferenceQuality,
                shots: int, seed: int, survival: float,
                detector_model: detection.DetectorModel,
                trigger_model: detection.DetectorModel,
                phase_jitter_rms: float) -> FringePoint:
    # seed derivation keyed by (run seed, point index): results do not depend
    # on how points are distributed over workers
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, point_index)))
    if phase_jitter_rms > 0.0:
        phi_shot = phi + rng.normal(0.0, phase_jitter_rms, size=shots)
    else:
        phi_shot = phi
    r_prob = fringe_probability(phi_shot, quality) * survival
    t_prob = (1.0 - fringe_probability(phi_shot, quality)) * survival
    clicks = detection.sample_clicks(
        {"d1": t_prob, "d2": r_prob},
        {"d1": detector_model, "d2": detector_model},
        shots, rng)
    trigger = detection.sample_clicks({"d3": 1.0}, {"d3": trigger_model}, shots, rng)
    cc_13 = int(np.sum(clicks["d1"] & trigger["d3"]))
    cc_23 = int(np.sum(clicks["d2"] & trigger["d3"]))
    t_est, r_est, sigma = detection.estimate_T_R(cc_13, cc_23)
    return FringePoint(phi_rad=float(phi), t_est=t_est, r_est=r_est,
                       sigma=sigma, shots=shots, coincidences=cc_13 + cc_23)


def fringe_scan(phis: np.ndarray | list[float],
                quality: InterferenceQuality,
                shots_per_point: int,
                seed: int,
                survival: float = 1.0,
                detector_model: detection.DetectorModel | None = None,
                trigger_model: detection.DetectorModel | None = None,
                phase_jitter_rms: float = 0.0,
                max_workers: int | None = None) -> list[FringePoint]:
    """Monte Carlo fringe scan over the given phase settings.

    Each point draws ``shots_per_point`` heralded photons, routes them with
    the contrast-degraded fringe law, applies loss and detector models, and
    estimates T/R from coincidences with the trigger.  Seeding is keyed by
    point index, so the output is identical for any ``max_workers``.
    """
    detector_model = detector_model or detection.DetectorModel()
    trigger_model = trigger_model or detection.DetectorModel()
    if shots_per_point <= 0:
        raise ValueError("shots_per_point must be positive")
    args = [(float(p), i, quality, shots_per_point, seed, survival,
             detector_model, trigger_model, phase_jitter_rms)
            for i, p in enumerate(phis)]
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda a: _scan_point(*a), args))
    return [_scan_point(*a) for a in args]


def fit_visibility(phis: np.ndarray | list[float],
                   r_values: np.ndarray | list[float],
                   sigmas: np.ndarray | list[float] | None = None) -> VisibilityFit:
    """Fit a cosine fringe and return its visibility.

    Args:
        phis: phase settings in radians, at least 4 points spanning more
            than pi.
        r_values: measured reflected-port probabilities.
        sigmas: optional per-point uncertainties; when given the fit is
            inverse-variance weighted, otherwise unweighted.

    Returns:
        VisibilityFit with V = c1/c0, its propagated 1-sigma uncertainty from
        the fit covariance, and the phase offset phi0.

    Raises:
        FitError: for degenerate (constant) data or a non-converging fit.
    """
    phis = np.asarray(phis, dtype=float)
    r_values = np.asarray(r_values, dtype=float)
    if phis.size < 4:
        raise FitError(f"need at least 4 points, got {phis.size}")
    if np.ptp(phis) <= math.pi:
        raise FitError("phase settings must span more than pi radians")
    if np.ptp(r_values) == 0.0:
        raise FitError("fringe data is constant; no visibility defined")

    def model(phi, c0, c1, phi0):
        return c0 + c1 * np.cos(phi - phi0)

    p0 = (float(np.mean(r_values)),
          float(np.ptp(r_values) / 2.0),
          float(phis[int(np.argmax(r_values))]))
    try:
        popt, pcov = curve_fit(
            model, phis, r_values, p0=p0,
            sigma=None if sigmas is None else np.asarray(sigmas, dtype=float),
            absolute_sigma=sigmas is not None, maxfev=10000)
    except RuntimeError as exc:
        raise FitError(f"fringe fit did not converge: {exc}") from exc
    c0, c1, phi0 = popt
    if c1 < 0:  # fold the sign ambiguity of the cosine amplitude
        c1, phi0 = -c1, phi0 + math.pi
    phi0 = phi0 % (2.0 * math.pi)
    if c0 <= 0 or not np.all(np.isfinite(pcov)):
        raise FitError("degenerate fringe fit (non-positive offset or singular covariance)")
    visibility = c1 / c0
    # propagate var(V) from the (c0, c1) covariance block
    g = np.array([-c1 / c0 ** 2, 1.0 / c0, 0.0])
    var_v = float(g @ pcov @ g)
    return VisibilityFit(visibility=float(visibility),
                         uncertainty=math.sqrt(max(var_v, 0.0)),
                         phase_offset_rad=float(phi0))


def fringe_points_to_csv(points: list[FringePoint]) -> str:
    """Render scan points as CSV text with the canonical column order."""
    lines = ["phi_rad,T_est,R_est,sigma"]
    for p in points:
        lines.append(f"{p.phi_rad!r},{p.t_est!r},{p.r_est!r},{p.sigma!r}")
    return "\n".join(lines) + "\n"
