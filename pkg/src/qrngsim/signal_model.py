"""Random interference events and time-domain waveforms for laser pulse pairs.

Two pulses from a gain-switched laser meet in an interferometer with a fresh,
uniformly random phase difference.  The integral (pulse-energy) signal is

    S = s1 + s2 + 2 * kappa * sqrt(s1 * s2) * cos(delta_phi)

where the visibility ``kappa`` is degraded by the pulse-overlap error delta
and by the linear chirp (Henry factor alpha):

    kappa = exp(-(1 + alpha**2) * delta**2 / (8 * w**2))

Monte-Carlo draws of (delta_phi, s1, s2, delta, zeta) follow here, together
with the time-domain intensity realization of a single pulse pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GAUSSIAN = "gaussian"
FLAT_TOP = "flat_top"

# Resampling bound for truncated-positive power draws; above this the
# truncation bias is no longer negligible.
MAX_SIGMA_S = 0.5


@dataclass(frozen=True)
class PulseShape:
    """Envelope of a single laser pulse.

    ``width`` is the Gaussian width parameter for ``gaussian`` pulses
    (envelope exp(-t^2 / (2 w^2))) and the plateau duration for ``flat_top``
    pulses.  Flat-top rise/fall edges are Gaussian with sigma ``edge_width``.
    """

    kind: str = GAUSSIAN
    width: float = 30e-12
    edge_width: float = 100e-12
    peak_power: float = 1.0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, FLAT_TOP):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.width <= 0:
            raise ValueError("pulse width must be positive")
        if self.kind == FLAT_TOP and self.edge_width <= 0:
            raise ValueError("flat_top edge_width must be positive")
        if self.peak_power <= 0:
            raise ValueError("peak_power must be positive")


@dataclass(frozen=True)
class LaserParams:
    """Laser-side statistics: chirp strength and output-power fluctuations."""

    alpha: float = 5.0
    repetition_period: float = 400e-12
    mean_s1: float = 1.0
    mean_s2: float = 1.0
    sigma_s1: float = 0.0
    sigma_s2: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.repetition_period <= 0:
            raise ValueError("repetition_period must be positive")
        if self.mean_s1 <= 0 or self.mean_s2 <= 0:
            raise ValueError("mean pulse energies must be positive")
        for s in (self.sigma_s1, self.sigma_s2):
            if not 0.0 <= s <= MAX_SIGMA_S:
                raise ValueError(
                    f"relative power sigma must lie in [0, {MAX_SIGMA_S}]"
                )


@dataclass(frozen=True)
class NoiseParams:
    """Classical noise: emission-time jitter and photodetector noise.

    ``sigma_zeta`` is the photodetector noise standard deviation relative to
    the mean interference level (mean_s1 + mean_s2).
    """

    sigma_jitter: float = 0.0
    sigma_zeta: float = 0.0

    def __post_init__(self):
        if self.sigma_jitter < 0 or self.sigma_zeta < 0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass(frozen=True)
class PhaseModel:
    """Distribution of the pulse-to-pulse phase difference.

    Only the uniform model is built in; gain switching randomizes the phase
    of every new pulse.  Subclass and override :meth:`sample` to study
    partially correlated phases.
    """

    kind: str = "uniform"

    def __post_init__(self):
        if self.kind != "uniform":
            raise ValueError(f"unknown phase model {self.kind!r}")

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(0.0, 2.0 * np.pi, size=size)


@dataclass(frozen=True)
class PulseInterferenceConfig:
    """All physical parameters of one interfering pulse pair."""

    pulse: PulseShape = field(default_factory=PulseShape)
    laser: LaserParams = field(default_factory=LaserParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    phase: PhaseModel = field(default_factory=PhaseModel)

    @property
    def mean_level(self) -> float:
        """Mean interference level: the phase-averaged integral signal."""
        return self.laser.mean_s1 + self.laser.mean_s2


@dataclass
class InterferenceEvent:
    """One Monte-Carlo draw; fields may be scalars or equally shaped arrays.

    ``integral_signal`` already includes the photodetector noise zeta.
    """

    delta_phi: float | np.ndarray
    s1: float | np.ndarray
    s2: float | np.ndarray
    delta: float | np.ndarray
    zeta: float | np.ndarray
    integral_signal: float | np.ndarray


@dataclass
class Waveform:
    """Uniformly sampled time-domain intensity."""

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.samples = np.asarray(self.samples, dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def span(self) -> tuple[float, float]:
        return self.t0, self.t0 + self.dt * (len(self.samples) - 1)


def visibility_kappa(delta, alpha: float, w: float):
    """Interference visibility of two chirped Gaussian pulses offset by ``delta``.

    Equals 1 at perfect overlap and decays with the overlap error; chirp
    amplifies the decay by (1 + alpha**2) in the exponent.
    """
    if w <= 0:
        raise ValueError("pulse width w must be positive")
    delta = np.asarray(delta, dtype=float)
    out = np.exp(-(1.0 + alpha * alpha) * delta * delta / (8.0 * w * w))
    return out.item() if out.ndim == 0 else out


def integral_signal(s1, s2, kappa, delta_phi):
    """Integral interference signal of a pulse pair.

    Returns s1 + s2 + 2*kappa*sqrt(s1*s2)*cos(delta_phi); accepts scalars or
    broadcastable arrays.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if np.any(s1 <= 0) or np.any(s2 <= 0):
        raise ValueError("pulse energies s1, s2 must be positive")
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or np.any(kappa > 1):
        raise ValueError("visibility kappa must lie in [0, 1]")
    out = s1 + s2 + 2.0 * kappa * np.sqrt(s1 * s2) * np.cos(delta_phi)
    return out.item() if out.ndim == 0 else out


def _truncated_positive_normal(rng, mean, sigma, size):
    """Gaussian draws resampled until strictly positive."""
    if sigma == 0.0:
        return np.full(size, float(mean))
    out = rng.normal(mean, sigma, size=size)
    bad = out <= 0.0
    while np.any(bad):
        out[bad] = rng.normal(mean, sigma, size=int(bad.sum()))
        bad = out <= 0.0
    return out


def draw_events(
    rng: np.random.Generator, config: PulseInterferenceConfig, n: int
) -> InterferenceEvent:
    """Draw ``n`` independent interference events as arrays.

    delta_phi follows the configured phase model; s1, s2 are Gaussian with
    relative sigmas, truncated positive; delta and zeta are zero-mean
    Gaussian.  zeta's scale is relative to the mean interference level.
    """
    laser = config.laser
    noise = config.noise
    delta_phi = config.phase.sample(rng, size=n)
    s1 = _truncated_positive_normal(
        rng, laser.mean_s1, laser.sigma_s1 * laser.mean_s1, n
    )
    s2 = _truncated_positive_normal(
        rng, laser.mean_s2, laser.sigma_s2 * laser.mean_s2, n
    )
    if noise.sigma_jitter > 0:
        delta = rng.normal(0.0, noise.sigma_jitter, size=n)
    else:
        delta = np.zeros(n)
    if noise.sigma_zeta > 0:
        zeta = rng.normal(0.0, noise.sigma_zeta * config.mean_level, size=n)
    else:
        zeta = np.zeros(n)
    kappa = visibility_kappa(delta, laser.alpha, config.pulse.width)
    signal = integral_signal(s1, s2, kappa, delta_phi) + zeta
    return InterferenceEvent(delta_phi, s1, s2, delta, zeta, signal)


def draw_event(
    rng: np.random.Generator, config: PulseInterferenceConfig
) -> InterferenceEvent:
    """Draw a single interference event."""
    batch = draw_events(rng, config, 1)
    return InterferenceEvent(
        *(float(np.asarray(getattr(batch, f))[0]) for f in (
            "delta_phi", "s1", "s2", "delta", "zeta", "integral_signal"))
    )


def _gaussian_envelope(t, width, peak):
    return peak * np.exp(-t * t / (2.0 * width * width))


def _flat_top_envelope(t, width, edge, peak):
    """Plateau of duration ``width`` centred at 0, Gaussian edges of sigma ``edge``."""
    a = -0.5 * width
    b = 0.5 * width
    out = np.ones_like(t)
    rise = t < a
    fall = t > b
    out[rise] = np.exp(-((t[rise] - a) ** 2) / (2.0 * edge * edge))
    out[fall] = np.exp(-((t[fall] - b) ** 2) / (2.0 * edge * edge))
    return peak * out


def _chirp_phase(t, pulse: PulseShape, alpha: float):
    """Phase accumulated by the linear chirp, relative to the pulse centre.

    Gaussian pulses carry the quadratic phase alpha*t^2/(4 w^2) across the
    whole envelope (instantaneous frequency offset alpha*t/(2 w^2)).  For
    flat-top pulses the transient, and hence the chirp, is confined to the
    rising edge: the same quadratic phase in the edge coordinate, frozen at
    zero once the plateau starts.
    """
    if alpha == 0.0:
        return np.zeros_like(t)
    if pulse.kind == GAUSSIAN:
        w = pulse.width
        return alpha * t * t / (4.0 * w * w)
    a = -0.5 * pulse.width  # plateau start
    u = np.minimum(t - a, 0.0)
    e = pulse.edge_width
    return alpha * u * u / (4.0 * e * e)


def _pair_intensity(t, pulse, alpha, delta_phi, center1, center2,
                    scale1=1.0, scale2=1.0):
    """Intensity of two interfering copies of ``pulse`` at the given centres."""
    t1 = t - center1
    t2 = t - center2
    if pulse.kind == GAUSSIAN:
        p1 = scale1 * _gaussian_envelope(t1, pulse.width, pulse.peak_power)
        p2 = scale2 * _gaussian_envelope(t2, pulse.width, pulse.peak_power)
    else:
        p1 = scale1 * _flat_top_envelope(t1, pulse.width, pulse.edge_width,
                                         pulse.peak_power)
        p2 = scale2 * _flat_top_envelope(t2, pulse.width, pulse.edge_width,
                                         pulse.peak_power)
    phase = delta_phi + _chirp_phase(t1, pulse, alpha) - _chirp_phase(t2, pulse, alpha)
    return p1 + p2 + 2.0 * np.sqrt(p1 * p2) * np.cos(phase)


def min_grid_dt(pulse: PulseShape) -> float:
    """Coarsest time step that still resolves the pulse transients."""
    if pulse.kind == GAUSSIAN:
        return pulse.width / 10.0
    return min(pulse.width, pulse.edge_width) / 10.0


def interference_waveform(
    config: PulseInterferenceConfig,
    delta_phi: float,
    delta: float,
    grid: tuple[float, float, int],
) -> Waveform:
    """Time-domain intensity of one pulse pair on a uniform grid.

    ``grid`` is (t0, dt, count).  The first pulse is centred at the midpoint
    of the grid, the second is offset by ``delta``.  The grid must span at
    least one repetition period and resolve the pulse (dt small enough for
    the envelope and edges).
    """
    t0, dt, count = grid
    if dt <= 0 or count < 2:
        raise ValueError("grid requires dt > 0 and count >= 2")
    span = dt * (count - 1)
    if span < config.laser.repetition_period:
        raise ValueError("grid must span at least one repetition period")
    if dt > min_grid_dt(config.pulse):
        raise ValueError("grid too coarse to resolve the pulse")
    t = t0 + dt * np.arange(count)
    center = t0 + 0.5 * span
    samples = _pair_intensity(
        t, config.pulse, config.laser.alpha, delta_phi, center, center + delta
    )
    return Waveform(t0=t0, dt=dt, samples=samples)
