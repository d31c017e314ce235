"""Inner-product detection, null-ensemble normalization and cross products.

The detector is the time-domain inner product of an output record with the
unit-energy version of the probe that drove it.  By Parseval this equals
the frequency-domain integral of Y(f) times the conjugate probe spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import NumericalError, ParameterError

Z_REFERENCE = 1.96


@dataclass
class DetectionRecord:
    input_class: str
    label: str  # DPSS order or frequency label of the probe
    raw_response: float
    system_label: str
    energy: float
    w_hz: float
    ho_scale: float
    seed: int
    repetition: int = 0
    snri: float = 0.0
    normalized_response: float | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "extra"]

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in self.columns()}

    @property
    def cell(self) -> tuple:
        """Coordinates shared by null and alternate records of one cell."""
        return (self.input_class, self.label, self.energy, self.w_hz, self.ho_scale)


def unit_energy(probe: np.ndarray) -> np.ndarray:
    probe = np.asarray(probe, dtype=float)
    norm = np.linalg.norm(probe)
    if norm == 0.0:
        raise ParameterError("probe has zero energy")
    return probe / norm


def inner_product_response(output: np.ndarray, probe: np.ndarray) -> float:
    """sum_t y_t p_t with the probe rescaled to unit energy."""
    output = np.asarray(output, dtype=float)
    probe = np.asarray(probe, dtype=float)
    if output.shape != probe.shape:
        raise ParameterError(f"length mismatch: {output.shape} vs {probe.shape}")
    return float(output @ unit_energy(probe))


def inner_product_spectral(output: np.ndarray, probe: np.ndarray, grid_size: int | None = None) -> float:
    """The same statistic as a grid sum of Y(f) conj(P(f)) (Parseval form)."""
    output = np.asarray(output, dtype=float)
    p = unit_energy(probe)
    g = grid_size or 2 * len(output)
    if g < len(output):
        raise ParameterError("grid must be at least as long as the record")
    return float(np.real(np.vdot(np.fft.fft(p, g), np.fft.fft(output, g))) / g)


@dataclass(frozen=True)
class NullStatistics:
    mean: float
    std: float
    size: int


def null_statistics(null) -> NullStatistics:
    null = np.asarray(null, dtype=float)
    if null.size < 2:
        raise ParameterError("null ensemble needs at least two values")
    std = float(np.std(null, ddof=1))
    if not std > 0:
        raise NumericalError("null ensemble has zero variance")
    return NullStatistics(float(null.mean()), std, int(null.size))


def normalize_against_null(alternate, null) -> np.ndarray:
    """z_i = (alt_i - mean(null)) / std(null), sample std with n - 1."""
    stats = null_statistics(null)
    return (np.asarray(alternate, dtype=float) - stats.mean) / stats.std


def normalize_records(records: list[DetectionRecord], null_label: str = "null") -> list[DetectionRecord]:
    """Fill ``normalized_response`` of every record from its cell's null ensemble.

    Null records are normalized against their own ensemble too, which gives
    the reference distribution of z under the null hypothesis.
    """
    nulls: dict = {}
    for rec in records:
        if rec.system_label == null_label:
            nulls.setdefault(rec.cell, []).append(rec.raw_response)
    for rec in records:
        if rec.cell not in nulls:
            raise ParameterError(f"no null ensemble for cell {rec.cell}")
        stats = null_statistics(nulls[rec.cell])
        rec.normalized_response = (rec.raw_response - stats.mean) / stats.std
    return records


def cross_product_matrix(responses: dict, probes: dict, raw: bool = False) -> tuple[list, np.ndarray]:
    """Normalized cross responses between DPSS-driven outputs and other probes.

    Entry (j, j') is |<y_j, p_j'>| / sqrt(|<y_j, p_j> <y_j', p_j'>|); with
    ``raw`` set, the un-normalized inner products <y_j, p_j'> are returned.
    Returns the sorted key list and the matrix.
    """
    if set(responses) != set(probes):
        raise ParameterError("responses and probes must share keys")
    keys = sorted(responses)
    ip = np.array([[inner_product_response(responses[j], probes[jp]) for jp in keys] for j in keys])
    if raw:
        return keys, ip
    diag = np.abs(np.diag(ip))
    if np.any(diag == 0):
        raise NumericalError("vanishing self-response")
    return keys, np.abs(ip) / np.sqrt(np.outer(diag, diag))


def mean_off_diagonal(matrix: np.ndarray) -> float:
    m = np.asarray(matrix, dtype=float)
    mask = ~np.eye(m.shape[0], dtype=bool)
    if not mask.any():
        raise ParameterError("matrix has no off-diagonal entries")
    return float(m[mask].mean())
