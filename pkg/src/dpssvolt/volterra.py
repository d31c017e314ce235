"""Separable Volterra MIMO systems in the time and frequency domains.

A kernel of order q is stored as a sum of rank-1 terms, each a coefficient
times one factor sequence per input slot.  Factor sequences are indexed by
lag starting at 1, so entry j of a factor is the kernel value at lag j+1;
kernels are zero at lag 0 and at negative lags.  With this layout an
order-q term contributes coefficient * prod_j (g_j * u_{m_j})(t), which
costs q convolutions instead of an N^q nested sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from . import ParameterError
from .slepian import SpectrumGrid, dtft, grid_frequencies

FULL_TENSOR_MAX_GRID = 64


@dataclass(frozen=True)
class RankOneTerm:
    """coefficient * prod_j factor_j[t_j - 1] acting on inputs input_index_j."""

    coefficient: float
    factors: tuple
    inputs: tuple

    @property
    def order(self) -> int:
        return len(self.factors)


@dataclass
class SeparableVolterraSystem:
    num_inputs: int
    num_outputs: int
    terms: dict = field(default_factory=dict)  # (output, order) -> list[RankOneTerm]
    dc_offset: np.ndarray | None = None
    order_scale: dict = field(default_factory=dict)  # order -> multiplier
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dc_offset is None:
            self.dc_offset = np.zeros(self.num_outputs)
        for (m, q), lst in self.terms.items():
            if not 0 <= m < self.num_outputs:
                raise ParameterError(f"output index {m} out of range")
            for term in lst:
                if term.order != q:
                    raise ParameterError("term order does not match its slot")
                if any(not 0 <= i < self.num_inputs for i in term.inputs):
                    raise ParameterError("input index out of range")
                if any(not np.all(np.isfinite(f)) for f in term.factors):
                    raise ParameterError("kernel values must be finite")

    @property
    def max_order(self) -> int:
        return max((q for (_, q) in self.terms), default=0)

    def add_term(self, output: int, coefficient: float, factors, inputs=None) -> None:
        factors = tuple(np.asarray(f, dtype=float) for f in factors)
        inputs = tuple(inputs) if inputs is not None else (0,) * len(factors)
        term = RankOneTerm(float(coefficient), factors, inputs)
        self.terms.setdefault((output, term.order), []).append(term)
        self.__post_init__()

    def scale(self, order: int) -> float:
        return float(self.order_scale.get(order, 1.0))


@dataclass
class MultiChannelSignal:
    values: np.ndarray
    sample_period: float = 1.0

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("signal values must be finite")

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


def lagged_convolution(factor: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(g * u)(t) = sum_{tau>=1} g[tau-1] u[t - tau] for t = 0..N-1."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    out = np.zeros(n)
    if n >= 2:
        out[1:] = np.convolve(np.asarray(factor, dtype=float)[: n - 1], u[: n - 1])[: n - 1]
    return out


def lagged_convolution_bank(factors: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise lagged_convolution of a [K, L] factor bank with one input."""
    factors = np.asarray(factors, dtype=float)
    n = len(u)
    out = np.zeros((factors.shape[0], n))
    if n >= 2:
        full = fftconvolve(factors[:, : n - 1], np.asarray(u, float)[None, : n - 1], axes=1)
        out[:, 1:] = full[:, : n - 1]
    return out


def per_order_outputs(system: SeparableVolterraSystem, signal: MultiChannelSignal) -> np.ndarray:
    """Array [M', Q, N]; slot q-1 holds the scaled order-q contribution."""
    if signal.num_channels != system.num_inputs:
        raise ParameterError(
            f"input has {signal.num_channels} channels, system expects {system.num_inputs}"
        )
    q_max = max(system.max_order, 1)
    n = signal.n_samples
    out = np.zeros((system.num_outputs, q_max, n))
    cache: dict = {}
    for (m, q), lst in system.terms.items():
        acc = np.zeros(n)
        for term in lst:
            prod = np.full(n, term.coefficient)
            for fac, ch in zip(term.factors, term.inputs):
                key = (id(fac), ch)
                if key not in cache:
                    cache[key] = (fac, lagged_convolution(fac, signal.values[ch]))
                prod = prod * cache[key][1]
            acc += prod
        out[m, q - 1] += system.scale(q) * acc
    return out


def evaluate_time_domain(system: SeparableVolterraSystem, signal: MultiChannelSignal,
                         per_order: bool = False):
    """Output channels y_m(t) = y_m^(0) + sum_q order-q contribution."""
    parts = per_order_outputs(system, signal)
    y = MultiChannelSignal(parts.sum(axis=1) + system.dc_offset[:, None], signal.sample_period)
    return (y, parts) if per_order else y


def _term_spectrum(term: RankOneTerm, freqs: np.ndarray) -> np.ndarray:
    """prod_j F_j(freqs[..., j]) times the coefficient; F_j uses lags from 1."""
    val = np.full(freqs.shape[:-1], term.coefficient, dtype=complex)
    for j, fac in enumerate(term.factors):
        lags = np.arange(1, len(fac) + 1)
        val = val * (np.exp(-2j * np.pi * freqs[..., j, None] * lags) @ fac)
    return val


def gfrf_order1(system: SeparableVolterraSystem, output: int, input_index: int,
                grid_size: int) -> SpectrumGrid:
    """Gamma^(1)_{m,m'}(f) on the centred uniform grid."""
    lst = [t for t in system.terms.get((output, 1), []) if t.inputs[0] == input_index]
    acc = np.zeros(grid_size, dtype=complex)
    for term in lst:
        acc += term.coefficient * dtft(term.factors[0], grid_size, first_index=1)
    return SpectrumGrid(system.scale(1) * acc, {"order": 1})


def gfrf_orderq_diagonal(system: SeparableVolterraSystem, output: int, q: int,
                         grid_size: int, argument: str = "sum") -> SpectrumGrid:
    """Gamma^(q) on the equal-frequency diagonal.

    With ``argument="sum"`` entry j holds Gamma^(q)(f/q, ..., f/q) for grid
    frequency f, i.e. indexed by the output frequency.  With
    ``argument="component"`` it holds Gamma^(q)(f, ..., f).
    """
    f = grid_frequencies(grid_size)
    if argument == "sum":
        f = f / q
    elif argument != "component":
        raise ParameterError("argument must be 'sum' or 'component'")
    freqs = np.repeat(f[:, None], q, axis=1)
    acc = np.zeros(grid_size, dtype=complex)
    for term in system.terms.get((output, q), []):
        acc += _term_spectrum(term, freqs)
    return SpectrumGrid(system.scale(q) * acc, {"order": q, "argument": argument})


def gfrf_orderq_full(system: SeparableVolterraSystem, output: int, q: int,
                     grid_size: int) -> np.ndarray:
    """Full tensor Gamma^(q)(f_1, ..., f_q) on a grid^q (G <= 64)."""
    if grid_size > FULL_TENSOR_MAX_GRID:
        raise ParameterError(
            f"full tensor limited to G <= {FULL_TENSOR_MAX_GRID}; use gfrf_orderq_diagonal"
        )
    acc = np.zeros((grid_size,) * q, dtype=complex)
    for term in system.terms.get((output, q), []):
        vec = [dtft(fac, grid_size, first_index=1) for fac in term.factors]
        t = np.array(term.coefficient, dtype=complex)
        for v in vec:
            t = np.multiply.outer(t, v)
        acc += t
    return system.scale(q) * acc


@dataclass
class ResponseSpectrum:
    total: list  # per output SpectrumGrid of Y_m
    per_order: np.ndarray  # [M', Q, G] complex, T_{m,q}(f)


def response_spectrum(system: SeparableVolterraSystem, signal: MultiChannelSignal,
                      grid_size: int) -> ResponseSpectrum:
    """Y_m(f) and the per-order decomposition T_{m,q}(f) on a zero-padded grid."""
    y, parts = evaluate_time_domain(system, signal, per_order=True)
    per = dtft(parts, grid_size)
    total = [SpectrumGrid(dtft(y.values[m], grid_size), {"output": m})
             for m in range(system.num_outputs)]
    return ResponseSpectrum(total, per)


def from_coefficients(basis_functions: np.ndarray, c1, c2, c3, ho_scale: float = 1.0,
                      sample_period: float = 1.0) -> SeparableVolterraSystem:
    """Single-input single-output system with diagonal-separable kernels.

    Orders 2 and 3 are multiplied by ``ho_scale`` at evaluation time.
    """
    sys = SeparableVolterraSystem(1, 1, order_scale={2: ho_scale, 3: ho_scale},
                                  metadata={"sample_period": sample_period})
    rows = [np.asarray(g, dtype=float) for g in basis_functions]
    for q, coeffs in ((1, c1), (2, c2), (3, c3)):
        lst = []
        for g, c in zip(rows, coeffs):
            if c != 0.0:
                lst.append(RankOneTerm(float(c), (g,) * q, (0,) * q))
        if lst:
            sys.terms[(0, q)] = lst
    return sys
