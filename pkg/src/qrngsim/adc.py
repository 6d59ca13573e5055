"""Digitizer model: analog bandwidth, single-point sampling, quantization.

The finite analog bandwidth is modelled by a second-order Butterworth
low-pass, discretized with the bilinear transform and frequency pre-warping
so the -3 dB point lands exactly on the requested cutoff.  Quantization is
uniform over [0, delta_u) with saturating end bins, like a real converter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .signal_model import Waveform

# Full-scale sine quantization-noise floor; SINAD at or below this carries
# less than one effective bit.
SINAD_FLOOR_DB = 1.76
DB_PER_BIT = 6.02


@dataclass(frozen=True)
class AdcConfig:
    """Static converter parameters.

    ``gain`` maps dimensionless model intensity to volts.  ``sample_time``
    is the sampling instant on the waveform grid; ``None`` selects the peak
    of the filtered mean pulse profile automatically.
    """

    n_bits: int = 8
    delta_u: float = 1.0
    bandwidth: float = 20e9
    sample_time: float | None = None
    gain: float | None = None
    sinad_db: float = 49.9

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("bit depth must be at least 1")
        if self.delta_u <= 0:
            raise ValueError("input range delta_u must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.gain is not None and self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.sinad_db <= SINAD_FLOOR_DB:
            raise ValueError(f"sinad_db must exceed {SINAD_FLOOR_DB}")

    @property
    def n_levels(self) -> int:
        return 1 << self.n_bits

    @property
    def lsb(self) -> float:
        return self.delta_u / self.n_levels


@dataclass
class Biquad:
    """One second-order IIR section with its two state registers.

    Transfer function (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2),
    state in transposed direct form II.  The state makes instances
    single-owner: do not share one across concurrent waveforms.
    """

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float
    dt: float
    z1: float = field(default=0.0)
    z2: float = field(default=0.0)

    def __post_init__(self):
        if not self.is_stable():
            raise ValueError("biquad poles must lie inside the unit circle")

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def reset(self) -> None:
        self.z1 = 0.0
        self.z2 = 0.0

    def step(self, x: float) -> float:
        """Process one sample, advancing the internal state."""
        y = self.b0 * x + self.z1
        self.z1 = self.b1 * x - self.a1 * y + self.z2
        self.z2 = self.b2 * x - self.a2 * y
        return y

    def process(self, x: np.ndarray) -> np.ndarray:
        """Filter an array (or a batch, along the last axis) from zero state.

        Resets the registers first; afterwards they hold the final state of
        the last row processed.
        """
        self.reset()
        x = np.asarray(x, dtype=float)
        y, zf = lfilter([self.b0, self.b1, self.b2], [1.0, self.a1, self.a2],
                        x, axis=-1, zi=np.zeros(x.shape[:-1] + (2,)))
        tail = zf[-1] if zf.ndim > 1 else zf
        self.z1, self.z2 = float(tail[0]), float(tail[1])
        return y

    def magnitude(self, f: float) -> float:
        """Exact discrete-time magnitude response at frequency ``f`` Hz."""
        z = np.exp(-2j * np.pi * f * self.dt)
        num = self.b0 + self.b1 * z + self.b2 * z * z
        den = 1.0 + self.a1 * z + self.a2 * z * z
        return float(np.abs(num / den))


def design_butterworth2(bandwidth: float, dt: float) -> Biquad:
    """Second-order Butterworth low-pass for a grid of step ``dt``.

    Bilinear transform with pre-warping at the cutoff: DC gain is exactly 1
    and the magnitude at ``bandwidth`` is exactly 1/sqrt(2).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nyquist = 0.5 / dt
    if not 0.0 < bandwidth < nyquist:
        raise ValueError(
            f"bandwidth must lie in (0, {nyquist:.6g}) Hz for dt={dt:.6g}"
        )
    k = 1.0 / math.tan(math.pi * bandwidth * dt)
    sq2 = math.sqrt(2.0)
    a0 = k * k + sq2 * k + 1.0
    return Biquad(
        b0=1.0 / a0,
        b1=2.0 / a0,
        b2=1.0 / a0,
        a1=2.0 * (1.0 - k * k) / a0,
        a2=(k * k - sq2 * k + 1.0) / a0,
        dt=dt,
    )


def filter_waveform(w: Waveform, f: Biquad) -> Waveform:
    """Causal filtering from zero initial state; output length equals input."""
    if not math.isclose(w.dt, f.dt, rel_tol=1e-9):
        raise ValueError(
            f"filter designed for dt={f.dt:.6g}, waveform has dt={w.dt:.6g}"
        )
    return Waveform(t0=w.t0, dt=w.dt, samples=f.process(w.samples))


def sample_at(w: Waveform, t_s: float) -> float:
    """Linearly interpolated waveform value at sampling instant ``t_s``."""
    lo, hi = w.span
    if not lo <= t_s <= hi:
        raise ValueError(f"sample time {t_s:.6g} outside waveform span "
                         f"[{lo:.6g}, {hi:.6g}]")
    pos = (t_s - w.t0) / w.dt
    i = min(int(pos), len(w.samples) - 2)
    frac = pos - i
    return float((1.0 - frac) * w.samples[i] + frac * w.samples[i + 1])


def quantize(v, cfg: AdcConfig):
    """Uniform quantization of volts into a bin index, saturating at the rails.

    [0, delta_u) maps onto 2**n_bits equal bins; inputs below range clamp to
    bin 0, at or above range to the top bin.  Accepts scalars or arrays.
    """
    v = np.asarray(v, dtype=float)
    idx = np.floor(v * (cfg.n_levels / cfg.delta_u)).astype(np.int64)
    idx = np.clip(idx, 0, cfg.n_levels - 1)
    return int(idx) if idx.ndim == 0 else idx


def enob(sinad_db: float) -> float:
    """Effective number of bits from the SINAD figure: (SINAD - 1.76) / 6.02."""
    if sinad_db <= SINAD_FLOOR_DB:
        raise ValueError(f"sinad_db must exceed {SINAD_FLOOR_DB} dB")
    return (sinad_db - SINAD_FLOOR_DB) / DB_PER_BIT


def sinad_from_enob(bits: float) -> float:
    """Inverse of :func:`enob`."""
    if bits <= 0:
        raise ValueError("enob must be positive")
    return bits * DB_PER_BIT + SINAD_FLOOR_DB
