"""Discrete prolate spheroidal sequences and their spectra.

Sequences come from the symmetric tridiagonal matrix that commutes with
the time-frequency concentration operator.  That matrix has well separated
eigenvalues even when the concentration eigenvalues crowd against one, so
it is the stable route for large N.  The concentration eigenvalues are
then recovered by applying the sinc kernel to each sequence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import NumericalError, ParameterError, ResolutionError

DEFAULT_OVERSAMPLE = 8


@dataclass(frozen=True)
class DpssParams:
    """Length N, time-bandwidth product NW and number of sequences K."""

    n_samples: int
    time_bandwidth: float
    num_sequences: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ParameterError("n_samples must be positive")
        if self.num_sequences < 1:
            raise ParameterError("num_sequences must be positive")
        if self.num_sequences > self.n_samples:
            raise ParameterError(
                f"num_sequences={self.num_sequences} exceeds n_samples={self.n_samples}"
            )
        w = self.half_bandwidth
        if not 0.0 < w < 0.5:
            raise ParameterError(f"half bandwidth W={w} must lie in (0, 1/2)")

    @property
    def half_bandwidth(self) -> float:
        """W in cycles per sample."""
        return self.time_bandwidth / self.n_samples


@dataclass(frozen=True)
class DpssSet:
    """K unit-energy sequences (rows) with their concentration eigenvalues."""

    params: DpssParams
    sequences: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        self.sequences.setflags(write=False)
        self.eigenvalues.setflags(write=False)

    @property
    def half_bandwidth(self) -> float:
        return self.params.half_bandwidth

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues.min())


@dataclass
class SpectrumGrid:
    """Complex samples on the uniform grid f_j = j/G - 1/2, j = 0..G-1."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def grid_size(self) -> int:
        return int(self.values.shape[-1])

    @property
    def frequencies(self) -> np.ndarray:
        return grid_frequencies(self.grid_size)

    @property
    def spacing(self) -> float:
        return 1.0 / self.grid_size


def grid_frequencies(grid_size: int) -> np.ndarray:
    """Uniform frequencies in [-1/2, 1/2) with spacing 1/grid_size."""
    return np.arange(grid_size) / grid_size - 0.5


def dtft(x: np.ndarray, grid_size: int, first_index: int = 0) -> np.ndarray:
    """Evaluate sum_t x_t exp(-i 2 pi f t) on the centred uniform grid.

    ``x`` is indexed along its last axis by t = first_index, first_index+1, ...
    The sequence length may exceed ``grid_size``; it is folded modulo G,
    which is exact for samples of the transform.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    t = first_index + np.arange(n)
    folded = np.zeros(x.shape[:-1] + (grid_size,), dtype=complex)
    np.add.at(folded, (..., t % grid_size), x)
    spec = np.fft.fft(folded, axis=-1)
    # reorder bins so that index j corresponds to f = j/G - 1/2
    return np.fft.fftshift(spec, axes=-1)


def concentration_matrix(n_samples: int, half_bandwidth: float) -> np.ndarray:
    """Dense sinc kernel sin(2 pi W (t - t')) / (pi (t - t')), diagonal 2W."""
    d = np.subtract.outer(np.arange(n_samples), np.arange(n_samples)).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.sin(2 * np.pi * half_bandwidth * d) / (np.pi * d)
    a[d == 0] = 2 * half_bandwidth
    return a


def _fix_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Make the first entry with magnitude above tol positive, row by row."""
    out = vectors.copy()
    for row in out:
        idx = np.flatnonzero(np.abs(row) > tol * np.abs(row).max())[0]
        if row[idx] < 0:
            row *= -1
    return out


def _concentration_eigenvalues(sequences: np.ndarray, half_bandwidth: float) -> np.ndarray:
    """Rayleigh quotients v^T A v of the sinc kernel, computed by FFT.

    A is Toeplitz, so A v is a correlation with the sinc kernel evaluated at
    lags -(N-1)..(N-1).
    """
    n = sequences.shape[1]
    lags = np.arange(-(n - 1), n).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = np.sin(2 * np.pi * half_bandwidth * lags) / (np.pi * lags)
    kern[n - 1] = 2 * half_bandwidth
    size = 1 << int(np.ceil(np.log2(3 * n)))
    kf = np.fft.rfft(kern, size)
    vf = np.fft.rfft(sequences, size, axis=1)
    av = np.fft.irfft(kf * vf, size, axis=1)[:, n - 1 : 2 * n - 1]
    return np.einsum("kt,kt->k", sequences, av)


def generate_dpss(params: DpssParams) -> DpssSet:
    """Compute the first K DPSS and their concentration eigenvalues."""
    n, k = params.n_samples, params.num_sequences
    w = params.half_bandwidth
    t = np.arange(n)
    diag = ((n - 1 - 2 * t) / 2.0) ** 2 * np.cos(2 * np.pi * w)
    off = t[1:] * (n - t[1:]) / 2.0
    try:
        vals, vecs = eigh_tridiagonal(
            diag, off, select="i", select_range=(n - k, n - 1)
        )
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"tridiagonal eigensolver failed for N={n}, K={k}: {exc}")
    # eigh returns ascending order; the most concentrated sequence has the
    # largest tridiagonal eigenvalue
    vecs = vecs[:, ::-1].T
    # LAPACK output is orthonormal to ~1e-15 already; a QR pass removes any
    # residual drift for very large N without changing the span
    q, r = np.linalg.qr(vecs.T)
    vecs = (q * np.sign(np.diag(r))).T
    vecs = _fix_signs(vecs)
    lam = _concentration_eigenvalues(vecs, w)
    if not np.all(np.isfinite(lam)):
        raise NumericalError("non-finite concentration eigenvalue")
    lam = np.clip(lam, np.finfo(float).tiny, 1.0 - np.finfo(float).eps)
    return DpssSet(params=params, sequences=vecs, eigenvalues=lam)


def dense_dpss(params: DpssParams) -> tuple[np.ndarray, np.ndarray]:
    """Reference sequences from a dense eigensolve of the sinc kernel.

    Accurate only while the requested eigenvalues are well separated from
    each other in double precision, i.e. for modest N.
    """
    a = concentration_matrix(params.n_samples, params.half_bandwidth)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1][: params.num_sequences]
    return _fix_signs(vecs[:, order].T), vals[order]


def evaluate_dpswf(dpss: DpssSet, k: int, grid_size: int | None = None) -> SpectrumGrid:
    """Zero-padded DFT V_k(f) of sequence k on the centred uniform grid."""
    if not 0 <= k < dpss.sequences.shape[0]:
        raise IndexError(f"sequence index {k} out of range")
    if grid_size is None:
        grid_size = DEFAULT_OVERSAMPLE * dpss.params.n_samples
    return SpectrumGrid(dtft(dpss.sequences[k], grid_size), {"k": k})


def band_weights(grid_size: int, lo: float, hi: float) -> np.ndarray:
    """Quadrature weights for integrating grid samples over [lo, hi].

    The rule integrates the trigonometric interpolant of the samples exactly,
    so it is exact for any trigonometric polynomial of degree below G/2 (for
    instance |V_k(f)|^2 whenever G >= 2N).  Over the full period it reduces
    to the trapezoid rule.  A plain trapezoid rule on a sub-interval is only
    second-order accurate, which is too coarse for 1e-6 eigenvalue checks.
    """
    half = grid_size // 2
    tau = np.arange(-half + 1, half)
    with np.errstate(invalid="ignore", divide="ignore"):
        # integral of exp(-i 2 pi f tau) over [lo, hi]
        moments = (np.exp(-2j * np.pi * hi * tau) - np.exp(-2j * np.pi * lo * tau)) / (
            -2j * np.pi * tau
        )
    moments[tau == 0] = hi - lo
    if grid_size % 2 == 0:
        # Nyquist term split evenly between +G/2 and -G/2
        tau = np.append(tau, half)
        m_pos = (np.exp(-2j * np.pi * hi * half) - np.exp(-2j * np.pi * lo * half)) / (-2j * np.pi * half)
        m_neg = np.conj(m_pos) if np.isclose(lo, -hi) else (
            np.exp(2j * np.pi * hi * half) - np.exp(2j * np.pi * lo * half)
        ) / (2j * np.pi * half)
        moments = np.append(moments, 0.5 * (m_pos + m_neg))
    # f_j = j/G - 1/2, so exp(i 2 pi f_j tau) = (-1)^tau exp(i 2 pi j tau / G)
    coeffs = np.zeros(grid_size, dtype=complex)
    np.add.at(coeffs, tau % grid_size, moments * np.where(tau % 2 == 0, 1.0, -1.0))
    wts = np.fft.ifft(coeffs)
    if np.isclose(lo, -hi):
        wts = wts.real
    return wts


def band_integral(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Integral over [lo, hi] of grid samples along the last axis."""
    values = np.asarray(values)
    out = values @ band_weights(values.shape[-1], lo, hi)
    return out.real if np.isrealobj(values) else out


def eigenvalues_via_quadrature(dpss: DpssSet, grid_size: int | None = None) -> np.ndarray:
    """In-band energy of each sequence by quadrature of |V_k(f)|^2 over (-W, W)."""
    n = dpss.params.n_samples
    if grid_size is None:
        grid_size = DEFAULT_OVERSAMPLE * n
    w = dpss.half_bandwidth
    if grid_size < 2 * n:
        raise ResolutionError(f"grid size {grid_size} below 2N={2 * n}")
    if 2 * w * grid_size < 8:
        raise ResolutionError("fewer than 8 grid points inside (-W, W)")
    spec = dtft(dpss.sequences, grid_size)
    return band_integral(np.abs(spec) ** 2, -w, w)


def modulate(dpss: DpssSet, k: int, carrier: float) -> tuple[np.ndarray, dict]:
    """Multiply sequence k by cos(2 pi f0 t); f0 in cycles per sample.

    Returns the product and a metadata dictionary that flags aliasing when
    the shifted band reaches the Nyquist frequency.
    """
    if not 0 <= carrier < 0.5:
        raise ParameterError("carrier must lie in [0, 1/2)")
    t = np.arange(dpss.params.n_samples)
    out = dpss.sequences[k] * np.cos(2 * np.pi * carrier * t)
    aliased = carrier + dpss.half_bandwidth >= 0.5
    if aliased:
        warnings.warn("modulated band reaches Nyquist", RuntimeWarning, stacklevel=2)
    return out, {"carrier": carrier, "aliasing": bool(aliased)}
