"""Experiment orchestration: detection sweeps, the J study and CSV output.

The detection sweep covers energies x higher-order scales x bandwidths x
repetitions for each input class and system label.  White inputs feed the
least-squares identification baseline; the sum-of-sinusoids and modulated
DPSS inputs feed the inner-product detector.  Every random draw comes from
``signals.child_rng`` keyed by the cell coordinates, so any record can be
regenerated on its own.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import NumericalError, ParameterError
from .bounds import fig1_rows
from .detector import (DetectionRecord, cross_product_matrix, inner_product_response,
                       mean_off_diagonal, normalize_records)
from .identify import (build_regression, inband_frequencies, inband_gfrf_statistics,
                       least_squares_identify)
from .laguerre import LaguerreBasis, SystemSpec, build_basis, load_system
from .signals import (InputSpec, add_output_noise, child_rng, gaussian_white, m_sequence,
                      modulated_dpss, odd_dpss_orders, ssr)
from .slepian import DpssParams, generate_dpss
from .volterra import MultiChannelSignal, from_coefficients, per_order_outputs

log = logging.getLogger(__name__)

SCHEMA_VERSION = "dpssvolt-records v1"
WHITE_CLASSES = ("gaussian_white", "m_sequence")
PROBE_CLASSES = ("ssr", "modulated_dpss")
SCALING_MODES = ("factor", "output_std")


@dataclass
class ExperimentConfig:
    n_samples: int = 240
    sample_period: float = 1.0 / 30.0
    rayleigh_hz: float = 3.0 / 8.0
    center_hz: float = 2.0
    energies: tuple = (4e3, 4e4, 4e6)
    ho_scales: tuple = (2e-6, 4e-6, 6e-6)
    w_hz: tuple = (0.5, 0.75, 1.0)
    repetitions: int = 10
    seed: int = 20240601
    input_classes: tuple = WHITE_CLASSES + PROBE_CLASSES
    system_labels: tuple = ("null", "alternate")
    noise_variance: float = 1.0
    kernel_df_hz: float | None = None  # default 1/(N dt), the record's DFT spacing
    scaling_mode: str = "factor"
    output_std_target: float = 1.4e2
    fig1_n: tuple = (256, 1000)
    fig1_nw: float = 4.0
    fig1_m: int = 6
    fig1_orders: tuple = (3, 4, 5, 6)
    fig1_draws: int = 25

    def __post_init__(self):
        for name in ("energies", "ho_scales", "w_hz", "input_classes", "system_labels",
                     "fig1_n", "fig1_orders"):
            val = getattr(self, name)
            setattr(self, name, tuple(val) if isinstance(val, (list, tuple)) else (val,))
        if self.n_samples < 2 or self.sample_period <= 0:
            raise ParameterError("n_samples and sample_period must be positive")
        if self.repetitions < 2:
            raise ParameterError("at least two repetitions are needed for normalization")
        if self.scaling_mode not in SCALING_MODES:
            raise ParameterError(f"scaling_mode must be one of {SCALING_MODES}")
        if any(e <= 0 for e in self.energies):
            raise ParameterError("energies must be positive")
        for w in self.w_hz:
            if self.center_hz + w >= self.nyquist_hz:
                raise ParameterError("center + W must lie below Nyquist")
            if self.time_bandwidth(w) < 1:
                raise ParameterError(f"W = {w} Hz gives NW below 1")
        if "null" not in self.system_labels:
            raise ParameterError("a null system label is required for normalization")

    @property
    def duration(self) -> float:
        return self.n_samples * self.sample_period

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.sample_period

    def time_bandwidth(self, w_hz: float) -> float:
        """NW = N * (W in cycles/sample)."""
        return self.n_samples * hz_to_cycles(w_hz, self.sample_period)


def hz_to_cycles(f_hz: float, sample_period: float) -> float:
    return f_hz * sample_period


def cycles_to_hz(f_cycles: float, sample_period: float) -> float:
    return f_cycles / sample_period


@dataclass
class CrossRecord:
    system_label: str
    energy: float
    w_hz: float
    ho_scale: float
    repetition: int
    mean_cross: float
    pairs: int


@dataclass
class ExperimentResult:
    records: list = field(default_factory=list)
    cross: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


class _Systems:
    """Unit-scale Volterra realizations of the shipped coefficient tables."""

    def __init__(self, labels, basis: LaguerreBasis):
        self.basis = basis
        self.specs: dict[str, SystemSpec] = {lab: load_system(lab) for lab in labels}
        self.systems = {
            lab: from_coefficients(basis.functions, s.coeffs_order1, s.coeffs_order2,
                                   s.coeffs_order3, ho_scale=1.0,
                                   sample_period=basis.sample_period)
            for lab, s in self.specs.items()
        }

    def per_order(self, label: str, u: np.ndarray) -> np.ndarray:
        """[3, N] per-order outputs for input u with unit higher-order scale."""
        return per_order_outputs(self.systems[label], MultiChannelSignal(u[None]))[0]


def _combine(parts: np.ndarray, energy_factor: float, scale: float, config: ExperimentConfig) -> np.ndarray:
    """Noiseless output from unit-energy per-order parts.

    Order q scales with energy**(q/2).  The higher-order scale multiplies
    the summed order-2 and order-3 contribution.
    """
    lin = parts[0] * energy_factor
    ho = parts[1] * energy_factor**2 + parts[2] * energy_factor**3
    if config.scaling_mode == "output_std":
        sd = float(np.std(ho, ddof=1))
        scale = config.output_std_target / sd if sd > 0 else 0.0
    return lin + scale * ho


def _probe_inputs(config: ExperimentConfig, w_hz: float) -> dict:
    """Unit-energy probes keyed by label for the SSR and DPSS classes."""
    nw = config.time_bandwidth(w_hz)
    out = {}
    if "ssr" in config.input_classes:
        spec = InputSpec("ssr", config.n_samples, config.sample_period, 1.0, config.center_hz,
                         w_hz, rayleigh_hz=config.rayleigh_hz)
        out[("ssr", "ssr")] = ssr(spec)
    if "modulated_dpss" in config.input_classes:
        orders = odd_dpss_orders(nw)
        dpss = generate_dpss(DpssParams(config.n_samples, nw, max(orders) + 1))
        for k in orders:
            spec = InputSpec("modulated_dpss", config.n_samples, config.sample_period, 1.0,
                             config.center_hz, w_hz, dpss_order=k, rayleigh_hz=config.rayleigh_hz)
            out[("modulated_dpss", f"dpss{k}")] = modulated_dpss(spec, dpss)
    return out


def _run_probe_cells(config, systems, result):
    for w in config.w_hz:
        try:
            probes = _probe_inputs(config, w)
        except (ParameterError, NumericalError) as exc:
            result.diagnostics.append({"cell": ("probe", w), "error": repr(exc)})
            continue
        for label in config.system_labels:
            parts = {key: systems.per_order(label, p) for key, p in probes.items()}
            for energy in config.energies:
                amp = math.sqrt(energy)
                for scale in config.ho_scales:
                    clean = {key: _combine(parts[key], amp, scale, config) for key in probes}
                    for rep in range(config.repetitions):
                        noisy = {}
                        for key, y in clean.items():
                            noisy[key] = add_output_noise(
                                y, config.seed, config.noise_variance,
                                key[0], key[1], label, energy, w, scale, rep)
                            result.records.append(DetectionRecord(
                                key[0], key[1], inner_product_response(noisy[key], probes[key]),
                                label, energy, w, scale, config.seed, rep,
                                snri=_snri(config, energy)))
                        dkeys = [k for k in noisy if k[0] == "modulated_dpss"]
                        if len(dkeys) >= 2:
                            try:
                                _, mat = cross_product_matrix({k: noisy[k] for k in dkeys},
                                                              {k: probes[k] for k in dkeys})
                                result.cross.append(CrossRecord(label, energy, w, scale, rep,
                                                                mean_off_diagonal(mat),
                                                                len(dkeys) * (len(dkeys) - 1)))
                            except NumericalError as exc:
                                result.diagnostics.append(
                                    {"cell": ("cross", label, energy, w, scale, rep), "error": repr(exc)})


def _snri(config: ExperimentConfig, energy: float) -> float:
    """Input energy over output noise variance."""
    return energy / config.noise_variance if config.noise_variance else math.inf


def _white_input(config, cls, label, energy, w, scale, rep) -> np.ndarray:
    seed = int(child_rng(config.seed, "input", cls, label, energy, w, scale, rep).integers(2**63))
    spec = InputSpec(cls, config.n_samples, config.sample_period, energy, config.center_hz, w,
                     seed=seed, rayleigh_hz=config.rayleigh_hz)
    return gaussian_white(spec) if cls == "gaussian_white" else m_sequence(spec)


def _run_white_cells(config, systems, result):
    basis = systems.basis
    df = 1.0 / config.duration if config.kernel_df_hz is None else config.kernel_df_hz
    freqs = {w: inband_frequencies(config.center_hz, w, df) for w in config.w_hz}
    for cls in (c for c in config.input_classes if c in WHITE_CLASSES):
        for label in config.system_labels:
            for energy in config.energies:
                for w in config.w_hz:
                    for scale in config.ho_scales:
                        for rep in range(config.repetitions):
                            cell = (cls, label, energy, w, scale, rep)
                            try:
                                u = _white_input(config, *cell)
                                parts = systems.per_order(label, u)
                                y = _combine(parts, 1.0, scale, config)
                                y = add_output_noise(y, config.seed, config.noise_variance, *cell)
                                fit = least_squares_identify(u, y, basis, design=build_regression(u, basis))
                                stats = inband_gfrf_statistics(fit, basis, w, config.center_hz, df)
                            except (ParameterError, NumericalError, np.linalg.LinAlgError) as exc:
                                result.diagnostics.append({"cell": cell, "error": repr(exc)})
                                continue
                            # one record per in-band frequency; each is normalized
                            # against the null values at the same frequency
                            for f_hz, stat in zip(freqs[w], stats):
                                result.records.append(DetectionRecord(
                                    cls, f"{f_hz:.4f}Hz", float(stat), label, energy, w, scale,
                                    config.seed, rep, snri=_snri(config, energy),
                                    extra={"condition": fit.condition, "rank": fit.rank}))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the detection sweep and normalize every record against its null cell."""
    basis = build_basis(n_samples=config.n_samples, sample_period=config.sample_period)
    systems = _Systems(config.system_labels, basis)
    result = ExperimentResult()
    _run_white_cells(config, systems, result)
    _run_probe_cells(config, systems, result)
    normalize_records(result.records)
    log.info("experiment produced %d records, %d diagnostics",
             len(result.records), len(result.diagnostics))
    return result


def run_fig1(config: ExperimentConfig) -> list[dict]:
    rows = []
    for n in config.fig1_n:
        rows.extend(fig1_rows(n, config.fig1_nw, config.fig1_m, config.fig1_orders,
                              config.fig1_draws, config.seed))
    return rows


# ---------------------------------------------------------------------------
# summaries

def simulation_count(records, label: str, classes) -> int:
    """Distinct (class, energy, W, scale, repetition) simulations for a label."""
    return len({(r.input_class, r.energy, r.w_hz, r.ho_scale, r.repetition)
                for r in records if r.system_label == label and r.input_class in classes})


def median_abs_z(records, classes, label: str = "alternate", energy=None, w_hz=None) -> float:
    vals = [abs(r.normalized_response) for r in records
            if r.system_label == label and r.input_class in classes
            and (energy is None or r.energy == energy)
            and (w_hz is None or r.w_hz == w_hz)]
    if not vals:
        raise ParameterError("no matching records")
    return float(np.median(vals))


def cross_trend(cross, energy: float, ho_scale: float, labels=("null",)) -> list[float]:
    """Mean normalized cross product per W (ascending), pooled over labels."""
    ws = sorted({c.w_hz for c in cross})
    out = []
    for w in ws:
        sel = [c for c in cross if c.w_hz == w and c.energy == energy
               and c.ho_scale == ho_scale and c.system_label in labels]
        if not sel:
            raise ParameterError(f"no cross records for W={w}")
        out.append(float(np.average([c.mean_cross for c in sel], weights=[c.pairs for c in sel])))
    return out


# ---------------------------------------------------------------------------
# output

def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema {SCHEMA_VERSION}\n")
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row[c]) for c in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def emit_plot_data(result: ExperimentResult, out_dir: str, fig1: list[dict] | None = None) -> list[str]:
    """Write one CSV per figure analog; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    cols = DetectionRecord.columns()
    key = lambda r: (r["input_class"], r["system_label"], r["energy"], r["w_hz"],
                     r["ho_scale"], r["label"], r["repetition"])
    rows = [r.as_row() for r in result.records]
    paths = []
    for name, classes in (("detection_kernel.csv", WHITE_CLASSES), ("detection_ip.csv", PROBE_CLASSES)):
        path = os.path.join(out_dir, name)
        _write_csv(path, cols, sorted((r for r in rows if r["input_class"] in classes), key=key))
        paths.append(path)
    ccols = [f.name for f in fields(CrossRecord)]
    crow = sorted((asdict(c) for c in result.cross),
                  key=lambda r: (r["system_label"], r["energy"], r["w_hz"], r["ho_scale"], r["repetition"]))
    path = os.path.join(out_dir, "cross_products.csv")
    _write_csv(path, ccols, crow)
    paths.append(path)
    if fig1 is not None:
        fcols = ["N", "Q", "draw", "m_q", "max_abs_J", "J_B", "closed_form", "J_B_sampled"]
        path = os.path.join(out_dir, "fig1.csv")
        _write_csv(path, fcols, sorted(fig1, key=lambda r: (r["N"], r["Q"], r["draw"])))
        paths.append(path)
    if result.diagnostics:
        path = os.path.join(out_dir, "diagnostics.csv")
        _write_csv(path, ["cell", "error"], [{"cell": repr(d["cell"]), "error": d["error"]}
                                              for d in result.diagnostics])
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# configuration files

def _parse_value(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_parse_value(t) for t in inner.split(",")] if inner else []
    if "," in text:
        return [_parse_value(t) for t in text.split(",")]
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if "/" in text:
        num, den = text.split("/", 1)
        try:
            return float(num) / float(den)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; lists are comma separated, optionally in brackets."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and "=" not in line):
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(val)
    return ExperimentConfig(**values)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
