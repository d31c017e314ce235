"""Laguerre-polynomial bases and the reference null/alternate systems.

Each system is third order with diagonal-separable kernels

    gamma^(q)_{t1..tq} = sum_k c_k^(q) g_{k,t1} ... g_{k,tq},

where g_{k,t} = L_{s(k-1)+1}(dt * t) samples a Laguerre polynomial of high
order.  Coefficients are least-squares fits of time kernels obtained from
frequency-response targets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
import scipy.linalg

from . import NumericalError, ParameterError
from .slepian import SpectrumGrid, grid_frequencies

# reference geometry: 240 samples at 30 Hz, 50 basis functions
N_SAMPLES = 240
SAMPLE_PERIOD = 1.0 / 30.0
NUM_FUNCTIONS = 50
ORDER_STRIDE = 100
# Frequency step used for the SSR grid and the low-frequency floor of the
# alternate linear response.  The reference value is 3/8 Hz, three times
# the reciprocal of the 8 s record.
RAYLEIGH_HZ = 3.0 / 8.0
NYQUIST_HZ = 0.5 / SAMPLE_PERIOD

NULL_GAIN = 0.75
# Reconstructed higher-order design (see README): flat order-2/3 targets of
# level HO_LEVEL, and an alternate order-3 target HO_LEVEL + BUMP_AMPLITUDE *
# (bump at 2 Hz + bump at 6 Hz) with Gaussian bumps of width BUMP_WIDTH_HZ.
HO_LEVEL = 60.0
BUMP_AMPLITUDE = -100.0
BUMP_WIDTH_HZ = 0.1
BUMP_CENTERS_HZ = (2.0, 6.0)
TABLE_VERSION = "v1"


def laguerre_polynomial(k: int, x):
    """L_k(x) by the three-term recurrence (j+1) L_{j+1} = (2j+1-x) L_j - j L_{j-1}."""
    if k < 0:
        raise ParameterError("Laguerre order must be non-negative")
    return laguerre_table(k, x)[k]


def laguerre_table(kmax: int, x) -> np.ndarray:
    """Rows L_0(x) .. L_kmax(x) for scalar or array x."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 1.0 - x
    for j in range(1, kmax):
        out[j + 1] = ((2 * j + 1 - x) * out[j] - j * out[j - 1]) / (j + 1)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite Laguerre value for order <= {kmax}")
    return out


@dataclass(frozen=True)
class LaguerreBasis:
    """Rows g_k(t) = L_{stride*(k-1)+1}(dt * t), t = 0..N-1."""

    num_functions: int
    n_samples: int
    sample_period: float
    functions: np.ndarray
    stride: int = ORDER_STRIDE
    metadata: dict = field(default_factory=dict)

    @property
    def orders(self) -> np.ndarray:
        return self.stride * np.arange(self.num_functions) + 1


def build_basis(
    num_functions: int = NUM_FUNCTIONS,
    n_samples: int = N_SAMPLES,
    sample_period: float = SAMPLE_PERIOD,
    stride: int = ORDER_STRIDE,
) -> LaguerreBasis:
    if num_functions < 1 or n_samples < 1 or sample_period <= 0 or stride < 1:
        raise ParameterError("basis parameters must be positive")
    orders = stride * np.arange(num_functions) + 1
    table = laguerre_table(int(orders[-1]), sample_period * np.arange(n_samples))
    g = table[orders].copy()
    g.setflags(write=False)
    sv = np.linalg.svd(g, compute_uv=False)
    tol = sv[0] * max(g.shape) * np.finfo(float).eps
    rank = int(np.sum(sv > tol))
    meta = {
        "rank": rank,
        "condition": float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf,
        "rank_deficient": rank < min(g.shape),
    }
    return LaguerreBasis(num_functions, n_samples, sample_period, g, stride, meta)


@dataclass
class FitResult:
    coeffs: np.ndarray
    residual_norm: float
    rank: int
    condition: float


def least_squares(design: np.ndarray, target: np.ndarray) -> FitResult:
    """Solve min ||design @ c - target|| by pivoted orthogonal factorization."""
    c, _, rank, sv = scipy.linalg.lstsq(design, target, lapack_driver="gelsd")
    resid = float(np.linalg.norm(design @ c - target))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return FitResult(np.asarray(c), resid, int(rank), cond)


def kernel_from_response(target: SpectrumGrid | Callable, n_samples: int,
                         sample_period: float, grid_size: int | None = None) -> np.ndarray:
    """Causal length-N time kernel from a frequency-response target.

    ``target`` is a SpectrumGrid on the centred grid (cycles/sample) or a
    callable of frequency in Hz.  The inverse DFT is taken on the grid and
    the first N samples kept; the real part is returned.
    """
    if callable(target):
        grid_size = grid_size or 8 * n_samples
        f_hz = grid_frequencies(grid_size) / sample_period
        values = np.asarray(target(f_hz), dtype=complex) * np.ones(grid_size)
    else:
        values = target.values
        grid_size = target.grid_size
    if grid_size < n_samples:
        raise ParameterError("target grid shorter than the kernel")
    h = np.fft.ifft(np.fft.ifftshift(values))
    return np.real(h[:n_samples])


def fit_order1_coeffs(target: SpectrumGrid | Callable, basis: LaguerreBasis) -> FitResult:
    """Least-squares Laguerre coefficients for a frequency-response target."""
    h = kernel_from_response(target, basis.n_samples, basis.sample_period)
    return least_squares(basis.functions.T, h)


# targets are written in Hz so they read like the experiment description

def flat_response(level: float) -> Callable:
    return lambda f: np.full(np.shape(f), float(level))


def alternate_linear_response(interpretation: str = "literal",
                              rayleigh_hz: float = RAYLEIGH_HZ,
                              nyquist_hz: float = NYQUIST_HZ) -> Callable:
    """Null gain 3/4 plus a cubic-law increment.

    ``literal``: 1e-3 |f|^3 for 3 f_R <= |f| <= f_N, 1e-3 f_R^3 below.
    ``decaying``: 1e-3 |f|^-3 above 3 f_R, 1e-3 f_R^-3 below.
    """
    if interpretation not in ("literal", "decaying"):
        raise ParameterError(f"unknown interpretation {interpretation!r}")
    p = 3.0 if interpretation == "literal" else -3.0

    def response(f):
        a = np.abs(np.asarray(f, dtype=float))
        hi = (a >= 3 * rayleigh_hz) & (a <= nyquist_hz)
        with np.errstate(divide="ignore"):
            inc = np.where(hi, 1e-3 * a**p, 0.0)
        inc = np.where(a < 3 * rayleigh_hz, 1e-3 * rayleigh_hz**p, inc)
        return NULL_GAIN + inc

    return response


def bump_response(centers_hz=BUMP_CENTERS_HZ, width_hz: float = BUMP_WIDTH_HZ) -> Callable:
    """Sum of Gaussian bumps in |f|, unit height at each centre."""

    def response(f):
        a = np.abs(np.asarray(f, dtype=float))
        return sum(np.exp(-0.5 * ((a - c) / width_hz) ** 2) for c in centers_hz)

    return response


@dataclass
class SystemSpec:
    """Coefficient vectors for orders 1..3 and the higher-order scale."""

    label: str
    coeffs_order1: np.ndarray
    coeffs_order2: np.ndarray
    coeffs_order3: np.ndarray
    ho_scale: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.coeffs_order1)
        if len(self.coeffs_order2) != n or len(self.coeffs_order3) != n:
            raise ParameterError("coefficient vectors must share one length")

    def with_scale(self, ho_scale: float) -> "SystemSpec":
        return SystemSpec(self.label, self.coeffs_order1, self.coeffs_order2,
                          self.coeffs_order3, ho_scale, dict(self.metadata))


def make_null_system(basis: LaguerreBasis, ho_scale: float = 0.0,
                     ho_level: float = HO_LEVEL) -> SystemSpec:
    """Flat 3/4 linear response with flat order-2 and order-3 targets."""
    lin = fit_order1_coeffs(flat_response(NULL_GAIN), basis)
    flat = fit_order1_coeffs(flat_response(1.0), basis).coeffs
    meta = {"order1_residual": lin.residual_norm, "ho_level": ho_level}
    return SystemSpec("null", lin.coeffs, ho_level * flat, ho_level * flat, ho_scale, meta)


def make_alternate_system(basis: LaguerreBasis, ho_scale: float = 0.0,
                          bump_interpretation: str = "literal",
                          ho_level: float = HO_LEVEL,
                          bump_amplitude: float = BUMP_AMPLITUDE,
                          bump_width_hz: float = BUMP_WIDTH_HZ) -> SystemSpec:
    """Cubic-law linear increment and a 2 Hz / 6 Hz order-3 bump.

    The order-2 kernel is shared with the null system.
    """
    lin = fit_order1_coeffs(alternate_linear_response(bump_interpretation), basis)
    flat = fit_order1_coeffs(flat_response(1.0), basis).coeffs
    bumps = fit_order1_coeffs(bump_response(width_hz=bump_width_hz), basis).coeffs
    c3 = ho_level * flat + bump_amplitude * bumps
    meta = {
        "order1_residual": lin.residual_norm,
        "interpretation": bump_interpretation,
        "ho_level": ho_level,
        "bump_amplitude": bump_amplitude,
        "bump_width_hz": bump_width_hz,
    }
    return SystemSpec("alternate", lin.coeffs, ho_level * flat, c3, ho_scale, meta)


def write_coefficient_table(spec: SystemSpec, path) -> None:
    with open(path, "w", newline="") as fh:
        scale = f" ho_scale={spec.ho_scale!r}" if spec.ho_scale else ""
        fh.write(f"# coefficient table {TABLE_VERSION} label={spec.label}{scale}\n")
        w = csv.writer(fh)
        w.writerow(["k", "c1", "c2", "c3"])
        for k, row in enumerate(zip(spec.coeffs_order1, spec.coeffs_order2, spec.coeffs_order3), 1):
            w.writerow([k] + [repr(float(v)) for v in row])


def read_coefficient_table(path, label: str | None = None,
                           ho_scale: float | None = None) -> SystemSpec:
    """Read a table written by write_coefficient_table.

    ``label`` and ``ho_scale`` override the values in the header line.
    """
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    header = lines[0]
    if header.startswith("#"):
        tags = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        label = label or tags.get("label")
        if ho_scale is None:
            ho_scale = float(tags.get("ho_scale", 0.0))
        lines = lines[1:]
    ho_scale = 0.0 if ho_scale is None else ho_scale
    rows = list(csv.DictReader(lines))
    cols = {c: np.array([float(r[c]) for r in rows]) for c in ("c1", "c2", "c3")}
    return SystemSpec(label or "unknown", cols["c1"], cols["c2"], cols["c3"], ho_scale)


def load_system(label: str, ho_scale: float = 0.0) -> SystemSpec:
    """Shipped coefficient table for ``null`` or ``alternate``."""
    if label not in ("null", "alternate"):
        raise ParameterError(f"unknown system label {label!r}")
    ref = resources.files("dpssvolt") / "data" / f"{label}_{TABLE_VERSION}.csv"
    with resources.as_file(ref) as path:
        return read_coefficient_table(path, label, ho_scale)
