"""Input generators with exact energy control, and output noise.

Every generator returns a length-n vector whose energy sum(u**2) equals the
requested target up to rounding.  Random draws come from numpy's PCG64 via
``child_rng``, which derives independent streams from a master seed and a
tuple of cell coordinates.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from . import ParameterError
from .laguerre import RAYLEIGH_HZ
from .slepian import DpssSet, band_integral, modulate

INPUT_CLASSES = ("gaussian_white", "m_sequence", "ssr", "modulated_dpss")
LFSR_DEGREE = 8
LFSR_TAPS = (8, 6, 5, 4)  # x^8 + x^6 + x^5 + x^4 + 1
LFSR_PERIOD = 2**LFSR_DEGREE - 1
SSR_ENDPOINT_TOL = 1e-12


def _key_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(repr(key).encode())


def child_rng(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, *keys).

    Keys may be ints, floats or strings; each is hashed to a 32-bit word
    and used as a SeedSequence spawn key, so streams for different cells or
    repetitions never overlap and do not depend on generation order.
    """
    spawn = tuple(_key_int(k) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=spawn)))


@dataclass(frozen=True)
class InputSpec:
    input_class: str
    n_samples: int = 240
    sample_period: float = 1.0 / 30.0
    target_energy: float = 4e4
    center_hz: float = 2.0
    half_bandwidth_hz: float = 0.5
    dpss_order: int | None = None
    seed: int = 0
    rayleigh_hz: float = RAYLEIGH_HZ

    def __post_init__(self):
        if self.input_class not in INPUT_CLASSES:
            raise ParameterError(f"unknown input class {self.input_class!r}")
        if self.n_samples < 1 or self.sample_period <= 0:
            raise ParameterError("n_samples and sample_period must be positive")
        if not self.target_energy > 0:
            raise ParameterError("target_energy must be positive")
        if self.half_bandwidth_hz <= 0 or self.rayleigh_hz <= 0:
            raise ParameterError("half_bandwidth_hz and rayleigh_hz must be positive")
        if self.center_hz + self.half_bandwidth_hz >= self.nyquist_hz:
            raise ParameterError("center + W must lie below the Nyquist frequency")

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.sample_period

    @property
    def time_bandwidth(self) -> float:
        """NW with W converted to cycles per sample."""
        return self.n_samples * self.half_bandwidth_hz * self.sample_period


def rescale_energy(u: np.ndarray, target_energy: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    e = float(u @ u)
    if e == 0.0:
        raise ParameterError("cannot rescale a zero vector")
    return u * np.sqrt(target_energy / e)


def gaussian_white(spec: InputSpec) -> np.ndarray:
    """Standard-normal draws rescaled to the target energy."""
    rng = child_rng(spec.seed, "gaussian_white")
    return rescale_energy(rng.standard_normal(spec.n_samples), spec.target_energy)


def lfsr_bits(n: int, start: int = 0) -> np.ndarray:
    """n bits of the degree-8 maximal-length sequence, beginning at phase ``start``.

    Uses the recurrence a[i] = a[i-8] ^ a[i-6] ^ a[i-5] ^ a[i-4] from an
    all-ones register, which has period 255.
    """
    total = start + n
    bits = np.ones(max(total, LFSR_DEGREE), dtype=np.uint8)
    for i in range(LFSR_DEGREE, total):
        bits[i] = bits[i - 8] ^ bits[i - 6] ^ bits[i - 5] ^ bits[i - 4]
    return bits[start:total]


def m_sequence(spec: InputSpec) -> np.ndarray:
    """+-a binary maximal-length sequence with a seed-chosen start phase."""
    phase = int(child_rng(spec.seed, "m_sequence").integers(LFSR_PERIOD))
    bits = lfsr_bits(spec.n_samples, phase)
    a = np.sqrt(spec.target_energy / spec.n_samples)
    return np.where(bits == 0, a, -a)


def ssr_frequencies(center_hz: float, half_bandwidth_hz: float, rayleigh_hz: float) -> np.ndarray:
    """In-band frequencies for the sum-of-sinusoids input.

    Frequencies start at center - W and step by the Rayleigh resolution
    while they stay at or below center + W.  When W is below half the
    Rayleigh resolution the set collapses to the centre frequency.
    """
    if half_bandwidth_hz <= 0 or rayleigh_hz <= 0:
        raise ParameterError("bandwidth and resolution must be positive")
    if half_bandwidth_hz < rayleigh_hz / 2:
        return np.array([center_hz])
    lo, hi = center_hz - half_bandwidth_hz, center_hz + half_bandwidth_hz
    count = int(np.floor((hi - lo) / rayleigh_hz + SSR_ENDPOINT_TOL)) + 1
    freqs = lo + rayleigh_hz * np.arange(count)
    freqs = freqs[freqs <= hi + SSR_ENDPOINT_TOL]
    if freqs.size == 0:
        raise ParameterError("no SSR frequency fits the band")
    return freqs


def ssr(spec: InputSpec) -> np.ndarray:
    """Equal-amplitude zero-phase cosines at the in-band frequencies."""
    freqs = ssr_frequencies(spec.center_hz, spec.half_bandwidth_hz, spec.rayleigh_hz)
    t = np.arange(spec.n_samples) * spec.sample_period
    u = np.cos(2 * np.pi * np.outer(freqs, t)).sum(axis=0)
    return rescale_energy(u, spec.target_energy)


def odd_dpss_orders(time_bandwidth: float) -> list[int]:
    """Odd orders 1, 3, ..., up to 2NW - 1."""
    return list(range(1, int(np.floor(2 * time_bandwidth - 1 + 1e-9)) + 1, 2))


def modulated_dpss(spec: InputSpec, dpss: DpssSet, protocol: bool = True) -> np.ndarray:
    """DPSS of order ``spec.dpss_order`` moved to the centre frequency.

    With ``protocol`` set, only odd orders up to 2NW - 1 are accepted.
    """
    k = spec.dpss_order
    if k is None:
        raise ParameterError("dpss_order is required for modulated_dpss")
    if dpss.params.n_samples != spec.n_samples:
        raise ParameterError("DPSS length does not match the InputSpec")
    if not 0 <= k < dpss.sequences.shape[0]:
        raise ParameterError(f"order {k} not present in the DPSS set")
    if protocol and k not in odd_dpss_orders(dpss.params.time_bandwidth):
        raise ParameterError(f"order {k} violates the odd-order protocol (odd, at most 2NW-1)")
    vec, _ = modulate(dpss, k, spec.center_hz * spec.sample_period)
    return rescale_energy(vec, spec.target_energy)


def generate(spec: InputSpec, dpss: DpssSet | None = None) -> np.ndarray:
    if spec.input_class == "gaussian_white":
        return gaussian_white(spec)
    if spec.input_class == "m_sequence":
        return m_sequence(spec)
    if spec.input_class == "ssr":
        return ssr(spec)
    if dpss is None:
        raise ParameterError("modulated_dpss requires a DpssSet")
    return modulated_dpss(spec, dpss)


def add_output_noise(signal: np.ndarray, seed: int, variance: float = 1.0, *keys) -> np.ndarray:
    """signal plus seeded Gaussian noise of the given variance."""
    signal = np.asarray(signal, dtype=float)
    if variance < 0:
        raise ParameterError("variance must be non-negative")
    if variance == 0:
        return signal.copy()
    rng = child_rng(seed, "noise", *keys)
    return signal + np.sqrt(variance) * rng.standard_normal(signal.shape)


def inband_fraction(u: np.ndarray, lo_hz: float, hi_hz: float, sample_period: float,
                    oversample: int = 8) -> float:
    """Fraction of energy with |f| in [lo_hz, hi_hz], by quadrature of |U|^2."""
    u = np.asarray(u, dtype=float)
    g = oversample * len(u)
    spec = np.abs(np.fft.fftshift(np.fft.fft(u, g))) ** 2
    lo, hi = lo_hz * sample_period, hi_hz * sample_period
    inband = band_integral(spec, lo, hi) + band_integral(spec, -hi, -lo)
    return float(inband / (u @ u))
