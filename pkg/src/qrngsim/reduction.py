"""Min-entropies and reduction factors for the digitized interference signal.

The raw sequence is compressed during extraction by a reduction factor.  The
purely classical factor is n / H_inf with H_inf = -log2(p_max).  The quantum
factors additionally discount randomness attributable to classical noise,
measured by how much probability mass classical broadening removes from the
first quantization bin (anchored at the lower support edge s_min):

  comparator          1 / (2 - H_half)          H_half over half the support
  strict ADC          n / (1 + H_q - H)         H, H_q over the first bin
  relaxed ADC         n / (2*H_q - H)
  factorized          gamma_nq * gamma_enob * gamma_comparator

where H uses the measured density and H_q the ideal arcsine density.  The
first-bin arcsine mass has the closed form (2/pi)*arcsin(1/sqrt(r*2^n)) with
r the support-to-range ratio; equivalently, for r*2^n >= 2,
1/2 - (1/pi)*arctan[(r*2^n - 2) / (2*sqrt(r*2^n - 1))].

A diverging factor means the source can no longer be trusted; it is
represented by the UNTRUSTED sentinel, never by a floating-point infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .density import WIDTH_THRESHOLD, QuantumPdfParams, smoothing_window


class _UntrustedSource:
    """Sentinel for an infinite reduction factor (untrusted source)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNTRUSTED"


UNTRUSTED = _UntrustedSource()


def is_untrusted(x) -> bool:
    return x is UNTRUSTED


def min_entropy_pmax(pdf) -> tuple[float, float]:
    """Word min-entropy of a histogram: (-log2(p_max), p_max)."""
    probs = pdf.probabilities()
    p_max = float(probs.max())
    if p_max <= 0.0:
        raise ValueError("empty histogram")
    return -math.log2(p_max), p_max


def gamma_classical(n: int, h_inf: float):
    """Classical reduction factor n / H_inf; UNTRUSTED when H_inf <= 0."""
    if h_inf <= 0.0:
        return UNTRUSTED
    if h_inf > n:
        raise ValueError("min-entropy cannot exceed the word length")
    return n / h_inf


def h_inf_comparator(pdf, p: QuantumPdfParams) -> float:
    """Comparator min-entropy: -log2 of the mass on the lower half-support.

    ``pdf`` is any density accessor with ``mass(lo, hi)``; the ideal arcsine
    gives exactly 1 bit.  Zero mass signals infinite entropy (math.inf).
    """
    mass = pdf.mass(p.s_min, p.s_min + 0.5 * p.width)
    if mass <= 0.0:
        return math.inf
    return -math.log2(mass)


def gamma_comparator(h_inf: float):
    """Comparator quantum reduction factor 1 / (2 - H_inf).

    H_inf below 1 is impossible for any classically broadened symmetric
    interference signal and indicates a model mismatch; at H_inf >= 2 the
    half-support mass has halved and the factor diverges.
    """
    if h_inf < 1.0:
        raise ValueError("comparator min-entropy below 1 bit: model mismatch")
    if h_inf >= 2.0:
        return UNTRUSTED
    return 1.0 / (2.0 - h_inf)


def h_inf_first_bin(pdf, s_min: float, delta_u: float, n: int) -> float:
    """Min-entropy from the first ADC bin: -log2 of mass on [s_min, s_min + lsb].

    Applied to the measured density this is H; applied to the ideal arcsine
    it is H_q.  Zero mass signals infinite entropy (math.inf).
    """
    if delta_u <= 0 or n < 1:
        raise ValueError("need delta_u > 0 and n >= 1")
    mass = pdf.mass(s_min, s_min + delta_u / (1 << n))
    if mass <= 0.0:
        return math.inf
    return -math.log2(mass)


def h_inf_q_closed_form(r: float, n: int) -> float:
    """Ideal-signal first-bin min-entropy, in closed form.

    ``r`` is the ratio of the arcsine support width to the ADC input range.
    The first-bin mass is (2/pi)*arcsin(1/sqrt(r*2^n)), defined whenever the
    bin does not exceed the support (r*2^n >= 1).
    """
    if r <= 0 or n < 1:
        raise ValueError("need r > 0 and n >= 1")
    u = r * (1 << n)
    if u < 1.0:
        raise ValueError("first bin wider than the signal support (r*2^n < 1)")
    mass = (2.0 / math.pi) * math.asin(1.0 / math.sqrt(u))
    return -math.log2(mass)


def gamma_adc_strict(n: int, h_inf_q: float, h_inf: float):
    """Strict ADC quantum reduction factor n / (1 + H_q - H).

    Diverges (UNTRUSTED) as soon as the first-bin probability has halved
    relative to the ideal signal.
    """
    if h_inf < h_inf_q:
        raise ValueError("measured H cannot be below the ideal H_q")
    denom = 1.0 + h_inf_q - h_inf
    if denom <= 0.0:
        return UNTRUSTED
    return n / denom


def gamma_adc_relaxed(n: int, h_inf_q: float, h_inf: float):
    """Relaxed ADC quantum reduction factor n / (2*H_q - H).

    Diverges (UNTRUSTED) when the first-bin min-entropy has doubled.
    """
    if h_inf < h_inf_q:
        raise ValueError("measured H cannot be below the ideal H_q")
    denom = 2.0 * h_inf_q - h_inf
    if denom <= 0.0:
        return UNTRUSTED
    return n / denom


def gamma_nq(n: int, h_inf_q: float) -> float:
    """Non-uniformity reduction factor n / H_q."""
    if h_inf_q <= 0.0:
        raise ValueError("h_inf_q must be positive")
    return n / h_inf_q


def gamma_enob(n: int, enob: float) -> float:
    """ADC internal-noise reduction factor n / ENOB."""
    if enob <= 0.0:
        raise ValueError("enob must be positive")
    if enob > n:
        raise ValueError("enob cannot exceed the bit depth")
    return n / enob


def gamma_total(g_nq, g_enob, g_comparator):
    """Total reduction: the product of the three factors; UNTRUSTED propagates."""
    factors = (g_nq, g_enob, g_comparator)
    if any(is_untrusted(g) for g in factors):
        return UNTRUSTED
    return g_nq * g_enob * g_comparator


def _fmt(x) -> str:
    if is_untrusted(x):
        return "untrusted"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def _parse(s: str):
    s = s.strip()
    if s == "untrusted":
        return UNTRUSTED
    if s == "nan":
        return math.nan
    try:
        return int(s)
    except ValueError:
        return float(s)


@dataclass
class ReductionReport:
    """Every entropy and reduction quantity for one measured distribution.

    ``h_inf`` and ``h_inf_q`` are first-bin min-entropies (measured and
    ideal); ``h_inf_half`` is the comparator (half-support) min-entropy that
    feeds ``gamma_comparator``.  The B-statistic conventions used (width
    threshold, smoothing window) are echoed for auditability.
    """

    n_bits: int
    p_max: float
    h_inf_pmax: float
    h_inf: float
    h_inf_q: float
    h_inf_half: float
    gamma_classical: object
    gamma_comparator: object
    gamma_adc_strict: object
    gamma_adc_relaxed: object
    gamma_nq: float
    gamma_enob: float
    gamma_total: object
    b_value: float
    s_min: float = 0.0
    s_max: float = math.nan
    support_ratio: float = math.nan
    sinad_db: float = math.nan
    enob: float = math.nan
    mode: str = "simulation"
    b_width_threshold: float = WIDTH_THRESHOLD
    b_smooth_window: int = 0

    FIELDS = ()  # filled in below

    def to_kv_text(self) -> str:
        lines = [f"{f.name}={_fmt(getattr(self, f.name))}"
                 for f in fields(self) if f.name != "FIELDS"]
        return "\n".join(lines) + "\n"

    def to_csv_row(self) -> str:
        names = [f.name for f in fields(self) if f.name != "FIELDS"]
        header = ",".join(names)
        row = ",".join(_fmt(getattr(self, n)) for n in names)
        return header + "\n" + row + "\n"

    @classmethod
    def from_kv_text(cls, text: str) -> "ReductionReport":
        data = {}
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed report line {ln}: {line!r}")
            key, _, value = line.partition("=")
            data[key.strip()] = value.strip()
        known = {f.name for f in fields(cls) if f.name != "FIELDS"}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                continue
            kwargs[key] = value if key == "mode" else _parse(value)
        return cls(**kwargs)


ReductionReport.FIELDS = tuple(
    f.name for f in fields(ReductionReport) if f.name != "FIELDS"
)


@dataclass
class GammaCurvePoint:
    """One Monte-Carlo grid point of the B-to-reduction lookup."""

    b_value: float
    gamma_nq_gamma: float
    n_bits: int
    sigma_s: float
    sigma_zeta: float
    bimodal: bool = True


class GammaCurve:
    """Monotone lookup from the measured B statistic to gamma_nq * Gamma.

    Built from a Monte-Carlo sweep over detector-noise levels; rows that
    lost bimodality are kept for the record but excluded from interpolation.
    """

    def __init__(self, points: list[GammaCurvePoint]):
        usable = [p for p in points if p.bimodal and math.isfinite(p.b_value)]
        if len(usable) < 2:
            raise ValueError("need at least two bimodal grid points")
        usable.sort(key=lambda p: p.b_value)
        b = np.array([p.b_value for p in usable])
        g = np.maximum.accumulate(np.array([p.gamma_nq_gamma for p in usable]))
        keep = np.concatenate([[True], np.diff(b) > 0])
        self._b = b[keep]
        self._g = g[keep]
        self.points = points

    @property
    def domain(self) -> tuple[float, float]:
        return float(self._b[0]), float(self._b[-1])

    def lookup(self, b_value: float) -> float:
        lo, hi = self.domain
        if not lo <= b_value <= hi:
            raise ValueError(
                f"B={b_value:.6g} outside calibrated domain [{lo:.6g}, {hi:.6g}]"
            )
        return float(np.interp(b_value, self._b, self._g))
