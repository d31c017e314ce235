"""Least-squares Volterra kernel identification in a Laguerre basis.

The model has one coefficient per basis function and order, matching the
diagonal-separable systems built by ``laguerre``:

    y(t) = sum_k c1_k phi_k(t) + c2_k phi_k(t)^2 + c3_k phi_k(t)^3,

with phi_k = g_k * u using the lag-1 convention of ``volterra``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import ParameterError
from .laguerre import LaguerreBasis
from .volterra import lagged_convolution_bank

MAX_ORDER = 3


@dataclass
class IdentificationResult:
    coeffs: dict  # order -> coefficient vector
    residual_norm: float
    rank: int
    condition: float
    rank_deficient: bool
    metadata: dict = field(default_factory=dict)

    def order1(self) -> np.ndarray:
        return self.coeffs[1]


def build_regression(u: np.ndarray, basis: LaguerreBasis, max_order: int = MAX_ORDER) -> np.ndarray:
    """Design matrix [phi, phi**2, ..., phi**max_order], shape (n, max_order * K)."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ParameterError("input must be one-dimensional")
    phi = lagged_convolution_bank(basis.functions, u).T
    return np.hstack([phi**q for q in range(1, max_order + 1)])


def least_squares_identify(u: np.ndarray, y: np.ndarray, basis: LaguerreBasis,
                           max_order: int = MAX_ORDER, design: np.ndarray | None = None,
                           rcond: float | None = None) -> IdentificationResult:
    """Minimize ||y - X c|| by an SVD-based (rank-revealing) solve.

    Columns are scaled to unit norm before solving, which removes the
    orders-of-magnitude spread between phi and phi**3 columns.  When the
    scaled matrix is rank deficient the minimum-norm solution is returned
    and flagged.
    """
    y = np.asarray(y, dtype=float)
    x = build_regression(u, basis, max_order) if design is None else np.asarray(design, float)
    if x.shape[0] != y.shape[0]:
        raise ParameterError("input and output lengths differ")
    k = basis.functions.shape[0]
    scale = np.linalg.norm(x, axis=0)
    scale[scale == 0] = 1.0
    xs = x / scale
    sol, _, rank, sv = scipy.linalg.lstsq(xs, y, cond=rcond, lapack_driver="gelsd")
    coeffs = sol / scale
    resid = float(np.linalg.norm(y - x @ coeffs))
    nonzero = sv[sv > 0]
    cond = float(sv[0] / nonzero[-1]) if nonzero.size else np.inf
    by_order = {q: coeffs[(q - 1) * k : q * k] for q in range(1, max_order + 1)}
    return IdentificationResult(by_order, resid, int(rank), cond, int(rank) < x.shape[1],
                                {"columns": x.shape[1], "samples": x.shape[0]})


def inband_frequencies(center_hz: float, half_bandwidth_hz: float, df_hz: float) -> np.ndarray:
    """center - W, center - W + df, ... up to center + W inclusive."""
    if df_hz <= 0:
        raise ParameterError("df must be positive")
    count = int(np.floor(2 * half_bandwidth_hz / df_hz + 1e-9)) + 1
    return center_hz - half_bandwidth_hz + df_hz * np.arange(count)


def order1_gfrf(coeffs: np.ndarray, basis: LaguerreBasis, freqs_hz: np.ndarray) -> np.ndarray:
    """Gamma^(1)(f) = sum_k c_k sum_tau g_k[tau-1] exp(-i 2 pi f dt tau)."""
    lags = np.arange(1, basis.functions.shape[1] + 1)
    kernel = np.asarray(coeffs) @ basis.functions
    phase = np.exp(-2j * np.pi * np.outer(np.asarray(freqs_hz) * basis.sample_period, lags))
    return phase @ kernel


def inband_gfrf_statistics(result: IdentificationResult, basis: LaguerreBasis, w_hz: float,
                           center_hz: float = 2.0, df_hz: float | None = None) -> np.ndarray:
    """|Gamma_hat^(1)(f)| on the in-band frequency list.

    ``df_hz`` defaults to the record's DFT spacing 1 / (N dt).
    """
    if 1 not in result.coeffs:
        raise ParameterError("no order-1 coefficients in the result")
    df = df_hz or 1.0 / (basis.n_samples * basis.sample_period)
    freqs = inband_frequencies(center_hz, w_hz, df)
    return np.abs(order1_gfrf(result.coeffs[1], basis, freqs))
