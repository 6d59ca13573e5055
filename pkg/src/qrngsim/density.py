"""Empirical and ideal probability densities of the sampled interference signal.

With only the random phase acting, the integral signal follows the arcsine
law on [s_min, s_max]:

    f(x) = 1 / (pi * sqrt((x - s_min) * (s_max - x)))
    F(x) = (2/pi) * arcsin(sqrt((x - s_min) / (s_max - s_min)))

Everything classical (power fluctuations, jitter, detector noise, finite
bandwidth) shows up as deviations of the accumulated histogram from this
shape.  The B statistic quantifies the deviation as total PDF width over
peak separation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, UnimodalPdfError

# Bins whose (smoothed) density reaches this fraction of the global maximum
# count toward the total PDF width.  Not a measured constant: a robustness
# convention, echoed into every report so consumers can audit it.
WIDTH_THRESHOLD = 0.01


def smoothing_window(n_bins: int) -> int:
    """Moving-average window for peak finding: max(3, n_bins/64), odd."""
    w = max(3, round(n_bins / 64))
    return w if w % 2 == 1 else w + 1


@dataclass(frozen=True)
class QuantumPdfParams:
    """Support of the ideal (quantum) arcsine distribution."""

    s_min: float
    s_max: float

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValueError("requires s_min < s_max")

    @property
    def width(self) -> float:
        return self.s_max - self.s_min

    def mass(self, lo: float, hi: float) -> float:
        """Probability mass on [lo, hi] under the arcsine law."""
        if hi < lo:
            raise ValueError("requires lo <= hi")
        return quantum_cdf(min(hi, self.s_max), self) - quantum_cdf(
            max(lo, self.s_min), self
        )


@dataclass(frozen=True)
class BStatistic:
    """Total PDF width over distance between the two main maxima."""

    total_width: float
    peak_distance: float
    value: float
    peak_positions: tuple[float, float] = (math.nan, math.nan)


def s_bounds(s1: float, s2: float, kappa: float) -> tuple[float, float]:
    """Support endpoints of the interference signal for given energies/visibility.

    Degenerate (zero-width) support is rejected: it admits no distribution.
    """
    if s1 <= 0 or s2 <= 0:
        raise ValueError("pulse energies must be positive")
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("visibility kappa must lie in [0, 1]")
    half = 2.0 * kappa * math.sqrt(s1 * s2)
    if half == 0.0:
        raise ValueError("degenerate support: kappa or energies make it a point")
    mid = s1 + s2
    return mid - half, mid + half


def quantum_pdf(x: float, p: QuantumPdfParams) -> float:
    """Ideal arcsine density; diverges at the endpoints, hence open interval."""
    if not p.s_min < x < p.s_max:
        raise ValueError("x must lie strictly inside (s_min, s_max)")
    return 1.0 / (math.pi * math.sqrt((x - p.s_min) * (p.s_max - x)))


def quantum_cdf(x: float, p: QuantumPdfParams) -> float:
    """Ideal arcsine distribution function on [s_min, s_max]."""
    if not p.s_min <= x <= p.s_max:
        raise ValueError("x must lie in [s_min, s_max]")
    u = (x - p.s_min) / p.width
    return (2.0 / math.pi) * math.asin(math.sqrt(u))


def quantum_quantile(q: float, p: QuantumPdfParams) -> float:
    """Inverse of :func:`quantum_cdf`."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    s = math.sin(math.pi * q / 2.0)
    return p.s_min + p.width * s * s


@dataclass
class EmpiricalPdf:
    """Histogram over uniform bins with saturating end bins."""

    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("need len(bin_edges) == len(counts) + 1")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def density(self) -> np.ndarray:
        """Normalized density per bin (integrates to 1)."""
        total = self.total
        if total == 0:
            raise ValueError("empty histogram")
        return self.counts / (total * np.diff(self.bin_edges))

    def probabilities(self) -> np.ndarray:
        total = self.total
        if total == 0:
            raise ValueError("empty histogram")
        return self.counts / total

    def mass(self, lo: float, hi: float) -> float:
        """Probability mass on [lo, hi], fractional at partially covered bins."""
        if hi < lo:
            raise ValueError("requires lo <= hi")
        total = self.total
        if total == 0:
            raise ValueError("empty histogram")
        edges = self.bin_edges
        left = np.clip((lo - edges[:-1]) / np.diff(edges), 0.0, 1.0)
        right = np.clip((hi - edges[:-1]) / np.diff(edges), 0.0, 1.0)
        return float(np.sum(self.counts * (right - left))) / total

    def merge(self, other: "EmpiricalPdf") -> "EmpiricalPdf":
        """Combine two shard histograms accumulated over identical bins."""
        if len(other.bin_edges) != len(self.bin_edges) or not np.allclose(
            other.bin_edges, self.bin_edges
        ):
            raise ValueError("histograms must share identical bin edges")
        return EmpiricalPdf(self.bin_edges.copy(), self.counts + other.counts)


def uniform_edges(lo: float, hi: float, n_bins: int) -> np.ndarray:
    if not lo < hi or n_bins < 1:
        raise ValueError("need lo < hi and n_bins >= 1")
    return np.linspace(lo, hi, n_bins + 1)


def accumulate(values, edges) -> EmpiricalPdf:
    """Histogram a stream of values with saturating end bins.

    Values below the first edge land in the first bin and values at or above
    the last edge in the last bin, mirroring ADC saturation.
    """
    edges = np.asarray(edges, dtype=float)
    if len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing, length >= 2")
    values = np.asarray(values, dtype=float)
    n_bins = len(edges) - 1
    width = (edges[-1] - edges[0]) / n_bins
    idx = np.floor((values - edges[0]) / width).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins) if values.size else np.zeros(
        n_bins, dtype=np.int64
    )
    return EmpiricalPdf(edges, counts)


def from_quantized(indices, n_bins: int, delta_u: float) -> EmpiricalPdf:
    """Histogram already-quantized bin indices on the matching ADC grid."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= n_bins):
        raise ValueError("quantized index outside [0, n_bins)")
    counts = np.bincount(indices, minlength=n_bins)
    return EmpiricalPdf(uniform_edges(0.0, delta_u, n_bins), counts)


def empirical_cdf(pdf: EmpiricalPdf, y: float) -> float:
    """Piecewise-linear CDF of the histogram: 0 below, 1 above the support."""
    if pdf.total == 0:
        raise ValueError("empty histogram")
    if y <= pdf.bin_edges[0]:
        return 0.0
    return pdf.mass(pdf.bin_edges[0], y)


def _smooth_density(density: np.ndarray, window: int) -> np.ndarray:
    """Moving average with edge renormalization (end bins keep full weight)."""
    kernel = np.ones(window)
    num = np.convolve(density, kernel, mode="same")
    den = np.convolve(np.ones_like(density), kernel, mode="same")
    return num / den


def _find_peaks(sm: np.ndarray) -> list[int]:
    """Indices of local maxima; plateaus collapse to their centre bin."""
    peaks = []
    n = len(sm)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sm[j + 1] == sm[i]:
            j += 1
        left_ok = i == 0 or sm[i - 1] < sm[i]
        right_ok = j == n - 1 or sm[j + 1] < sm[j]
        if left_ok and right_ok and sm[i] > 0:
            peaks.append((i + j) // 2)
        i = j + 1
    return peaks


def estimate_B(pdf: EmpiricalPdf, min_counts: int = 10_000) -> BStatistic:
    """Ratio of total PDF width to the distance between its two main maxima.

    Total width spans all bins whose smoothed density reaches 1% of the
    global maximum; the maxima are the two highest local peaks of the
    smoothed density.  A distribution without two peaks raises
    UnimodalPdfError: the bimodal interference structure was destroyed.
    """
    if pdf.total < min_counts:
        raise ValueError(f"histogram needs >= {min_counts} counts for B")
    density = pdf.density()
    window = smoothing_window(pdf.n_bins)
    sm = _smooth_density(density, window)

    peaks = _find_peaks(sm)
    if len(peaks) < 2:
        raise UnimodalPdfError(
            f"found {len(peaks)} peak(s); bimodal distribution required"
        )
    top = sorted(sorted(peaks, key=lambda i: sm[i], reverse=True)[:2])
    centers = pdf.centers
    p_lo, p_hi = float(centers[top[0]]), float(centers[top[1]])
    peak_distance = p_hi - p_lo
    if peak_distance <= 0:
        raise UnimodalPdfError("the two main peaks coincide")

    occupied = np.nonzero(sm >= WIDTH_THRESHOLD * sm.max())[0]
    total_width = float(
        pdf.bin_edges[occupied[-1] + 1] - pdf.bin_edges[occupied[0]]
    )
    return BStatistic(
        total_width=total_width,
        peak_distance=peak_distance,
        value=total_width / peak_distance,
        peak_positions=(p_lo, p_hi),
    )


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a model CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    f = np.array([cdf(v) for v in x])
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


HISTOGRAM_HEADER = ("bin_low", "bin_high", "count")


def write_histogram_csv(pdf: EmpiricalPdf, path) -> None:
    """Histogram export: header row then one ``bin_low,bin_high,count`` per bin."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTOGRAM_HEADER)
        for lo, hi, c in zip(pdf.bin_edges[:-1], pdf.bin_edges[1:], pdf.counts):
            writer.writerow([f"{lo:.12g}", f"{hi:.12g}", int(c)])


def read_histogram_csv(path) -> EmpiricalPdf:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_histogram_csv(fh)


def _parse_histogram_csv(fh: io.TextIOBase) -> EmpiricalPdf:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty histogram file", line=1) from None
    if [h.strip() for h in header] != list(HISTOGRAM_HEADER):
        raise DataFormatError(
            f"expected header {','.join(HISTOGRAM_HEADER)}", line=1
        )
    lows, highs, counts = [], [], []
    for ln, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            lows.append(float(row[0]))
            highs.append(float(row[1]))
            counts.append(int(row[2]))
        except (ValueError, IndexError):
            raise DataFormatError("malformed histogram row", line=ln) from None
    if not lows:
        raise DataFormatError("histogram file has no bins", line=2)
    edges = np.append(lows, highs[-1])
    if not np.allclose(highs[:-1], lows[1:]):
        raise DataFormatError("histogram bins are not contiguous")
    return EmpiricalPdf(edges, np.array(counts))
