"""Monte-Carlo orchestration: event batches, histograms, reports, sweeps.

Reproducibility scheme: a run is split into fixed-size chunks and chunk i
always draws from ``numpy.random.SeedSequence(entropy=seed, spawn_key=(i,))``.
Results are therefore identical whether chunks run serially or on any number
of workers.

Monte-Carlo estimates of the min-entropies are floored at their analytic
minima (1 bit for the comparator entropy, H_q for the first-bin entropy):
sampling noise in the noiseless limit would otherwise dip below bounds that
hold exactly for the underlying distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import adc as adc_mod
from .adc import AdcConfig, design_butterworth2, quantize
from .density import (
    EmpiricalPdf,
    QuantumPdfParams,
    accumulate,
    estimate_B,
    from_quantized,
    smoothing_window,
    uniform_edges,
)
from .errors import UnimodalPdfError
from .reduction import (
    UNTRUSTED,
    GammaCurve,
    GammaCurvePoint,
    ReductionReport,
    gamma_adc_relaxed,
    gamma_adc_strict,
    gamma_classical,
    gamma_comparator,
    gamma_enob,
    gamma_nq,
    gamma_total,
    h_inf_comparator,
    h_inf_first_bin,
    h_inf_q_closed_form,
    min_entropy_pmax,
)
from .signal_model import (
    FLAT_TOP,
    GAUSSIAN,
    PulseInterferenceConfig,
    Waveform,
    _pair_intensity,
    _truncated_positive_normal,
    draw_events,
    min_grid_dt,
)

DEFAULT_CHUNK = 1 << 16
MARGIN_FRACTION = 0.25  # histogram margin beyond the ADC range, each side


def substream(seed: int, index: int) -> np.random.Generator:
    """Deterministic per-chunk random stream; independent of worker layout."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    )


def chunk_sizes(n: int, chunk: int = DEFAULT_CHUNK):
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def default_gain(config: PulseInterferenceConfig, cfg: AdcConfig) -> float:
    """Calibrate the mean interference level to mid-range (delta_u / 2)."""
    return cfg.delta_u / (2.0 * config.mean_level)


def quantum_params_volts(
    config: PulseInterferenceConfig, gain: float
) -> QuantumPdfParams:
    """Ideal-signal support in volts, from the model parameters."""
    m1, m2 = config.laser.mean_s1, config.laser.mean_s2
    half = 2.0 * math.sqrt(m1 * m2)
    return QuantumPdfParams(
        s_min=gain * (m1 + m2 - half), s_max=gain * (m1 + m2 + half)
    )


def margin_edges(cfg: AdcConfig, margin_fraction: float = MARGIN_FRACTION):
    """ADC-aligned bin edges extended by whole bins beyond both rails.

    Keeping the ADC bin width exactly and anchoring an edge at 0 V makes
    first-bin masses exact bin sums while leaving room for classical noise
    to spill past the ideal support without being clamped.
    """
    extra = int(math.ceil(margin_fraction * cfg.n_levels))
    lo = -extra * cfg.lsb
    hi = cfg.delta_u + extra * cfg.lsb
    return uniform_edges(lo, hi, cfg.n_levels + 2 * extra)


def direct_volts(
    config: PulseInterferenceConfig,
    cfg: AdcConfig,
    n: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """Sampled analog voltages from the integral-signal model (no bandwidth)."""
    gain = cfg.gain if cfg.gain is not None else default_gain(config, cfg)
    out = np.empty(n)
    pos = 0
    for i, size in enumerate(chunk_sizes(n, chunk)):
        events = draw_events(substream(seed, i), config, size)
        out[pos : pos + size] = gain * events.integral_signal
        pos += size
    return out


@dataclass
class SimulationResult:
    """Everything one simulation run produces."""

    analog_volts: np.ndarray
    indices: np.ndarray
    quantized_pdf: EmpiricalPdf
    margin_pdf: EmpiricalPdf
    params: QuantumPdfParams
    gain: float
    sample_time: float | None
    report: ReductionReport


class WaveformSimulator:
    """Full analog chain: pulse pair, Butterworth bandwidth, one-point sampling.

    The grid spans ``periods`` repetition periods with the pulse pair
    centred; per event the two pulse centres receive independent emission
    jitters of sigma_jitter/sqrt(2) each, so their overlap error has exactly
    sigma_jitter while the sampling instant also sees common-mode wander.
    Detector noise is added to the sampled value, after the analog chain.
    """

    def __init__(
        self,
        config: PulseInterferenceConfig,
        cfg: AdcConfig,
        periods: float = 3.0,
    ):
        self.config = config
        self.cfg = cfg
        pulse = config.pulse
        self.dt = min_grid_dt(pulse)
        if cfg.bandwidth >= 0.5 / self.dt:
            raise ValueError("ADC bandwidth at or above the grid Nyquist rate")
        span = periods * config.laser.repetition_period
        self.count = int(round(span / self.dt)) + 1
        self.t = self.dt * np.arange(self.count)
        self.center = 0.5 * self.dt * (self.count - 1)
        self.filter = design_butterworth2(cfg.bandwidth, self.dt)

        mean_wave = _pair_intensity(
            self.t, pulse, config.laser.alpha, 0.0, self.center, self.center
        )
        # Phase-averaged profile: the cross term integrates to zero.
        envelope_only = 0.5 * (
            mean_wave
            + _pair_intensity(
                self.t, pulse, config.laser.alpha, math.pi,
                self.center, self.center,
            )
        )
        self.mean_filtered = self.filter.process(envelope_only)
        if cfg.sample_time is not None:
            self.sample_time = float(cfg.sample_time)
            lo, hi = 0.0, self.t[-1]
            if not lo <= self.sample_time <= hi:
                raise ValueError("sample_time outside the simulation grid")
        else:
            self.sample_time = float(self.t[np.argmax(self.mean_filtered)])
        level = self._interp_columns(self.mean_filtered[None, :])[0]
        if level <= 0:
            raise ValueError("no signal at the sampling instant")
        self.gain = (
            cfg.gain if cfg.gain is not None else cfg.delta_u / (2.0 * level)
        )

    @property
    def onset(self) -> float:
        """Nominal start of the pulse on the grid."""
        pulse = self.config.pulse
        if pulse.kind == GAUSSIAN:
            return self.center - 3.0 * pulse.width
        return self.center - 0.5 * pulse.width - 2.0 * pulse.edge_width

    def _interp_columns(self, filtered: np.ndarray) -> np.ndarray:
        pos = self.sample_time / self.dt
        i = min(int(pos), self.count - 2)
        frac = pos - i
        return (1.0 - frac) * filtered[:, i] + frac * filtered[:, i + 1]

    def _simulate_chunk(self, rng: np.random.Generator, size: int) -> np.ndarray:
        laser = self.config.laser
        noise = self.config.noise
        pulse = self.config.pulse
        phase = self.config.phase.sample(rng, size=size)[:, None]
        scale1 = _truncated_positive_normal(rng, 1.0, laser.sigma_s1, size)
        scale2 = _truncated_positive_normal(rng, 1.0, laser.sigma_s2, size)
        if noise.sigma_jitter > 0:
            sj = noise.sigma_jitter / math.sqrt(2.0)
            j1 = rng.normal(0.0, sj, size=size)
            j2 = rng.normal(0.0, sj, size=size)
        else:
            j1 = np.zeros(size)
            j2 = np.zeros(size)
        zeta = rng.standard_normal(size)

        wave = _pair_intensity(
            self.t[None, :],
            pulse,
            laser.alpha,
            phase,
            self.center + j1[:, None],
            self.center + j2[:, None],
            scale1[:, None],
            scale2[:, None],
        )
        sampled = self._interp_columns(self.filter.process(wave))
        volts = self.gain * sampled
        if noise.sigma_zeta > 0:
            volts = volts + zeta * (noise.sigma_zeta * 0.5 * self.cfg.delta_u)
        return volts

    def sample_volts(
        self, n: int, seed: int, chunk: int = 8192
    ) -> np.ndarray:
        out = np.empty(n)
        pos = 0
        for i, size in enumerate(chunk_sizes(n, chunk)):
            out[pos : pos + size] = self._simulate_chunk(
                substream(seed, i), size
            )
            pos += size
        return out

    def mean_waveform(self) -> Waveform:
        """Filtered phase-averaged pulse profile (for inspection/CSV export)."""
        return Waveform(t0=0.0, dt=self.dt, samples=self.mean_filtered.copy())


def build_report(
    margin_pdf: EmpiricalPdf,
    quantized_pdf: EmpiricalPdf,
    params: QuantumPdfParams,
    cfg: AdcConfig,
    mode: str = "simulation",
    gamma_curve: GammaCurve | None = None,
) -> ReductionReport:
    """Assemble the full reduction report from accumulated histograms.

    In simulation mode the arcsine support comes from the model and the
    total factor is the three-way product.  In analysis mode the caller
    anchors ``params`` at the measured peak positions; when a lookup curve
    is supplied the total factor follows the measured-B procedure
    (curve value times gamma_enob) instead of the direct product.
    """
    n = cfg.n_bits
    h_pmax, p_max = min_entropy_pmax(quantized_pdf)
    g_classical = gamma_classical(n, h_pmax)

    r = params.width / cfg.delta_u
    h_q = h_inf_q_closed_form(r, n)
    h_first = max(h_inf_first_bin(margin_pdf, params.s_min, cfg.delta_u, n), h_q)
    h_half = max(h_inf_comparator(margin_pdf, params), 1.0)

    g_comp = gamma_comparator(h_half)
    g_strict = gamma_adc_strict(n, h_q, h_first)
    g_relaxed = gamma_adc_relaxed(n, h_q, h_first)
    g_nq = gamma_nq(n, h_q)
    g_enob = gamma_enob(n, adc_mod.enob(cfg.sinad_db))

    try:
        b = estimate_B(quantized_pdf)
        b_value = b.value
    except UnimodalPdfError:
        b_value = math.nan

    if gamma_curve is not None:
        if math.isnan(b_value):
            raise UnimodalPdfError(
                "cannot apply the B lookup: distribution is not bimodal"
            )
        g_total = gamma_curve.lookup(b_value) * g_enob
    else:
        g_total = gamma_total(g_nq, g_enob, g_comp)

    return ReductionReport(
        n_bits=n,
        p_max=p_max,
        h_inf_pmax=h_pmax,
        h_inf=h_first,
        h_inf_q=h_q,
        h_inf_half=h_half,
        gamma_classical=g_classical,
        gamma_comparator=g_comp,
        gamma_adc_strict=g_strict,
        gamma_adc_relaxed=g_relaxed,
        gamma_nq=g_nq,
        gamma_enob=g_enob,
        gamma_total=g_total,
        b_value=b_value,
        s_min=params.s_min,
        s_max=params.s_max,
        support_ratio=r,
        sinad_db=cfg.sinad_db,
        enob=adc_mod.enob(cfg.sinad_db),
        mode=mode,
        b_smooth_window=smoothing_window(quantized_pdf.n_bins),
    )


def simulate(
    config: PulseInterferenceConfig,
    cfg: AdcConfig,
    n_samples: int,
    seed: int,
    use_waveform: bool = True,
    periods: float = 3.0,
) -> SimulationResult:
    """Run one full simulation and assemble histograms plus the report."""
    if use_waveform:
        sim = WaveformSimulator(config, cfg, periods=periods)
        volts = sim.sample_volts(n_samples, seed)
        gain = sim.gain
        sample_time = sim.sample_time
    else:
        gain = cfg.gain if cfg.gain is not None else default_gain(config, cfg)
        volts = direct_volts(config, cfg, n_samples, seed)
        sample_time = None
    indices = quantize(volts, cfg)
    quantized_pdf = from_quantized(indices, cfg.n_levels, cfg.delta_u)
    margin_pdf = accumulate(volts, margin_edges(cfg))
    params = quantum_params_volts(config, gain)
    report = build_report(margin_pdf, quantized_pdf, params, cfg)
    return SimulationResult(
        analog_volts=volts,
        indices=indices,
        quantized_pdf=quantized_pdf,
        margin_pdf=margin_pdf,
        params=params,
        gain=gain,
        sample_time=sample_time,
        report=report,
    )


def analyze_quantized(
    indices,
    cfg: AdcConfig,
    gamma_curve: GammaCurve,
) -> ReductionReport:
    """Reduction report for externally measured quantized samples.

    The arcsine support is anchored at the two histogram peaks (they sit at
    the support edges of the underlying ideal signal); the total reduction
    factor follows the measured-B lookup procedure.
    """
    pdf = from_quantized(indices, cfg.n_levels, cfg.delta_u)
    b = estimate_B(pdf)
    params = QuantumPdfParams(*b.peak_positions)
    return build_report(
        pdf, pdf, params, cfg, mode="analysis", gamma_curve=gamma_curve
    )


def _shared_noise_sweep(
    n_bits_list,
    sigma_s: float,
    sigma_zeta_grid,
    mc_samples: int,
    seed: int,
    delta_u: float = 1.0,
    sinad_db: float | None = None,
):
    """Common Monte-Carlo core for the noise sweeps.

    One base population of noise-free signals is shared across the grid
    (with matched unit-normal detector draws scaled per grid point): common
    random numbers keep the sweep curves smooth.

    Yields (n, sigma_zeta, margin_pdf, quantized_pdf, params, cfg) tuples.
    """
    from .signal_model import LaserParams, NoiseParams, PulseShape

    config = PulseInterferenceConfig(
        pulse=PulseShape(),
        laser=LaserParams(sigma_s1=sigma_s, sigma_s2=sigma_s),
        noise=NoiseParams(),
    )
    base = np.empty(mc_samples)
    unit = np.empty(mc_samples)
    pos = 0
    for i, size in enumerate(chunk_sizes(mc_samples)):
        rng = substream(seed, i)
        events = draw_events(rng, config, size)
        base[pos : pos + size] = events.integral_signal
        unit[pos : pos + size] = rng.standard_normal(size)
        pos += size

    mean_level = config.mean_level
    for sigma_zeta in sigma_zeta_grid:
        signal = base + (sigma_zeta * mean_level) * unit
        for n in n_bits_list:
            cfg = AdcConfig(
                n_bits=n,
                delta_u=delta_u,
                sinad_db=(
                    sinad_db
                    if sinad_db is not None
                    else adc_mod.sinad_from_enob(0.75 * n)
                ),
            )
            gain = default_gain(config, cfg)
            volts = gain * signal
            margin_pdf = accumulate(volts, margin_edges(cfg))
            quantized_pdf = from_quantized(
                quantize(volts, cfg), cfg.n_levels, cfg.delta_u
            )
            params = quantum_params_volts(config, gain)
            yield n, float(sigma_zeta), margin_pdf, quantized_pdf, params, cfg


@dataclass
class SweepRow:
    """One grid point of a reduction-factor sweep."""

    n_bits: int
    sigma_zeta: float
    h_inf: float
    h_inf_q: float
    h_inf_half: float
    gamma_strict: object
    gamma_relaxed: object
    gamma_comparator: object
    gamma_nq: float
    gamma_nq_gamma: object


def gamma_noise_sweep(
    n_bits_list,
    sigma_s: float,
    sigma_zeta_grid,
    mc_samples: int = 2_000_000,
    seed: int = 20_123,
    delta_u: float = 1.0,
) -> list[SweepRow]:
    """Reduction factors versus detector noise for several bit depths."""
    rows = []
    for n, sz, margin_pdf, _, params, cfg in _shared_noise_sweep(
        n_bits_list, sigma_s, sigma_zeta_grid, mc_samples, seed, delta_u
    ):
        r = params.width / cfg.delta_u
        h_q = h_inf_q_closed_form(r, n)
        h = max(h_inf_first_bin(margin_pdf, params.s_min, cfg.delta_u, n), h_q)
        h_half = max(h_inf_comparator(margin_pdf, params), 1.0)
        g_comp = gamma_comparator(h_half)
        g_nq = gamma_nq(n, h_q)
        rows.append(
            SweepRow(
                n_bits=n,
                sigma_zeta=sz,
                h_inf=h,
                h_inf_q=h_q,
                h_inf_half=h_half,
                gamma_strict=gamma_adc_strict(n, h_q, h),
                gamma_relaxed=gamma_adc_relaxed(n, h_q, h),
                gamma_comparator=g_comp,
                gamma_nq=g_nq,
                gamma_nq_gamma=gamma_total(g_nq, 1.0, g_comp),
            )
        )
    return rows


def b_to_gamma_curve(
    n_bits: int,
    sigma_s: float,
    sigma_zeta_grid,
    mc_samples: int = 1_000_000,
    seed: int = 77_001,
    delta_u: float = 1.0,
) -> GammaCurve:
    """Calibrate the measured-B to gamma_nq*Gamma lookup for one bit depth.

    Each grid point simulates the device at a detector-noise level, measures
    B from the quantized histogram, and pairs it with the directly computed
    gamma_nq * Gamma.  Grid points whose distribution lost bimodality are
    flagged and excluded from the interpolation.
    """
    points = []
    for n, sz, margin_pdf, quantized_pdf, params, cfg in _shared_noise_sweep(
        [n_bits], sigma_s, sigma_zeta_grid, mc_samples, seed, delta_u
    ):
        r = params.width / cfg.delta_u
        g_nq = gamma_nq(n, h_inf_q_closed_form(r, n))
        h_half = max(h_inf_comparator(margin_pdf, params), 1.0)
        g_comp = gamma_comparator(h_half)
        product = gamma_total(g_nq, 1.0, g_comp)
        try:
            b_value = estimate_B(quantized_pdf).value
            bimodal = True
        except UnimodalPdfError:
            b_value = math.nan
            bimodal = False
        if product is UNTRUSTED:
            bimodal = False
            product = math.nan
        points.append(
            GammaCurvePoint(
                b_value=b_value,
                gamma_nq_gamma=product,
                n_bits=n,
                sigma_s=sigma_s,
                sigma_zeta=sz,
                bimodal=bimodal,
            )
        )
    return GammaCurve(points)
