"""Command-line entry point: ``dpssvolt <command> [<subcommand>] ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import NumericalError, ParameterError, ResolutionError
from .bounds import bound_C, compute_JB, fig1_rows, measure_suprema
from .detector import DetectionRecord, inner_product_response, normalize_records
from .harness import emit_plot_data, load_config, run_experiment, run_fig1
from .identify import inband_frequencies, inband_gfrf_statistics, least_squares_identify
from .laguerre import (build_basis, make_alternate_system, make_null_system,
                       read_coefficient_table, write_coefficient_table)
from .signals import InputSpec, generate
from .slepian import DpssParams, eigenvalues_via_quadrature, generate_dpss
from .volterra import MultiChannelSignal, from_coefficients, per_order_outputs

log = logging.getLogger("dpssvolt")


def _read_series(path: str, column: str | None = None) -> np.ndarray:
    """Last (or named) numeric column of a CSV file; '#' lines are skipped."""
    with open(path) as fh:
        rows = list(csv.reader(ln for ln in fh if ln.strip() and not ln.startswith("#")))
    header, body = rows[0], rows[1:]
    idx = header.index(column) if column else len(header) - 1
    return np.array([float(r[idx]) for r in body])


def _write_rows(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _sibling(path: str, suffix: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_{suffix}{ext or '.csv'}"


def cmd_dpss_gen(args) -> None:
    dpss = generate_dpss(DpssParams(args.n, args.nw, args.k))
    _write_rows(args.out, ["k", "t", "v"],
                ((k, t, dpss.sequences[k, t]) for k in range(args.k) for t in range(args.n)))
    if args.grid:
        quad = eigenvalues_via_quadrature(dpss, args.grid)
        _write_rows(_sibling(args.out, "eigenvalues"), ["k", "lambda", "lambda_quadrature"],
                    zip(range(args.k), dpss.eigenvalues, quad))
    else:
        _write_rows(_sibling(args.out, "eigenvalues"), ["k", "lambda"],
                    zip(range(args.k), dpss.eigenvalues))


def cmd_system_build(args) -> None:
    basis = build_basis()
    make = make_null_system if args.label == "null" else make_alternate_system
    write_coefficient_table(make(basis, args.ho_scale), args.out)


def _load_system(path: str, ho_scale: float | None):
    spec = read_coefficient_table(path, ho_scale=ho_scale)
    basis = build_basis(num_functions=len(spec.coeffs_order1))
    system = from_coefficients(basis.functions, spec.coeffs_order1, spec.coeffs_order2,
                               spec.coeffs_order3, spec.ho_scale, basis.sample_period)
    return spec, basis, system


def cmd_simulate(args) -> None:
    _, basis, system = _load_system(args.system, args.ho_scale)
    u = _read_series(args.input, "u")
    parts = per_order_outputs(system, MultiChannelSignal(u[None], basis.sample_period))[0]
    y = parts.sum(axis=0)
    t = np.arange(len(u))
    if args.per_order:
        _write_rows(args.out, ["t", "y", "y1", "y2", "y3"],
                    zip(t, y, parts[0], parts[1], parts[2]))
        g = args.grid or 8 * len(u)
        spec = np.fft.fft(np.vstack([parts, y]), g, axis=1)[:, : g // 2 + 1]
        freqs = np.arange(g // 2 + 1) / (g * basis.sample_period)
        _write_rows(_sibling(args.out, "spectra"), ["f_hz", "abs_T1", "abs_T2", "abs_T3", "abs_Y"],
                    zip(freqs, *np.abs(spec)))
    else:
        _write_rows(args.out, ["t", "y"], zip(t, y))


def cmd_bounds_fig1(args) -> None:
    rows = []
    for n in args.n:
        rows.extend(fig1_rows(n, args.nw, args.m, draws=args.draws, seed=args.seed))
    cols = ["N", "Q", "draw", "m_q", "max_abs_J", "J_B", "closed_form", "J_B_sampled"]
    _write_rows(args.out, cols, ([r[c] for c in cols] for r in rows))


def cmd_bounds_report(args) -> None:
    spec, basis, system = _load_system(args.system, args.ho_scale)
    dpss = generate_dpss(DpssParams(basis.n_samples, args.nw, args.k))
    sup = measure_suprema(system, 0, dpss, M=args.m)
    w = dpss.half_bandwidth
    with open(args.out, "w") as fh:
        for q in range(2, system.max_order + 1):
            jb = compute_JB(dpss, q, args.m)
            rep = bound_C(q, args.m, w, sup, args.f, j_b=jb.value)
            row = asdict(rep)
            row.update({"system": spec.label, "f": args.f, "J_B_sampled": jb.sampled})
            fh.write(json.dumps(row) + "\n")


def cmd_input_gen(args) -> None:
    spec = InputSpec(args.input_class, args.n, args.dt, args.energy, args.center_hz,
                     args.w_hz, dpss_order=args.order, seed=args.seed)
    dpss = None
    if args.input_class == "modulated_dpss":
        if args.order is None:
            raise ParameterError("--order is required for modulated_dpss")
        dpss = generate_dpss(DpssParams(args.n, spec.time_bandwidth, args.order + 1))
    u = generate(spec, dpss)
    _write_rows(args.out, ["t", "u"], zip(np.arange(args.n), u))


def _parse_output_name(name: str) -> tuple[str, str, int]:
    """'<system>__<probe>__<rep>.csv' -> (system, probe, rep)."""
    stem = os.path.splitext(name)[0]
    parts = stem.split("__")
    if len(parts) != 3:
        raise ParameterError(f"output file {name!r} is not named <system>__<probe>__<rep>.csv")
    return parts[0], parts[1], int(parts[2].lstrip("rep"))


def cmd_detect(args) -> None:
    probes = {os.path.splitext(f)[0]: _read_series(os.path.join(args.probes, f))
              for f in sorted(os.listdir(args.probes)) if f.endswith(".csv")}
    records = []
    for f in sorted(os.listdir(args.outputs)):
        if not f.endswith(".csv"):
            continue
        label, probe, rep = _parse_output_name(f)
        if probe not in probes:
            raise ParameterError(f"no probe file for {probe!r}")
        y = _read_series(os.path.join(args.outputs, f))
        # file inputs carry no sweep coordinates, so cells are keyed by probe only
        records.append(DetectionRecord("file", probe, inner_product_response(y, probes[probe]),
                                       label, 0.0, 0.0, 0.0, 0, rep))
    normalize_records(records, args.null_label)
    cols = DetectionRecord.columns()
    _write_rows(args.out, cols, ([r.as_row()[c] for c in cols] for r in records))


def cmd_identify(args) -> None:
    u = _read_series(args.input, "u")
    y = _read_series(args.output, "y")
    basis = build_basis()
    if len(u) != basis.n_samples:
        basis = build_basis(n_samples=len(u))
    res = least_squares_identify(u, y, basis)
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# residual_norm={res.residual_norm!r} rank={res.rank} "
                 f"condition={res.condition!r} rank_deficient={res.rank_deficient}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "c1", "c2", "c3"])
        for k, row in enumerate(zip(res.coeffs[1], res.coeffs[2], res.coeffs[3]), 1):
            w.writerow([k] + [repr(float(v)) for v in row])
    if args.w_hz:
        df = 1.0 / (basis.n_samples * basis.sample_period)
        freqs = inband_frequencies(args.center_hz, args.w_hz, df)
        stats = inband_gfrf_statistics(res, basis, args.w_hz, args.center_hz, df)
        _write_rows(_sibling(args.out, "inband"), ["f_hz", "abs_gamma1"], zip(freqs, stats))


def cmd_harness_run(args) -> None:
    config = load_config(args.config)
    result = run_experiment(config)
    fig1 = run_fig1(config) if args.fig1 else None
    for path in emit_plot_data(result, args.out, fig1):
        print(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpssvolt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    dp = sub.add_parser("dpss").add_subparsers(dest="action", required=True)
    g = dp.add_parser("gen", help="generate DPSS and eigenvalues")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--nw", type=float, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--grid", type=int, default=None,
                   help="also report eigenvalues by quadrature on this grid")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_dpss_gen)

    sp = sub.add_parser("system").add_subparsers(dest="action", required=True)
    b = sp.add_parser("build", help="fit and write a reference coefficient table")
    b.add_argument("--label", choices=("null", "alternate"), required=True)
    b.add_argument("--ho-scale", type=float, default=0.0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_system_build)

    s = sub.add_parser("simulate", help="drive a coefficient-table system with an input")
    s.add_argument("--system", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--ho-scale", type=float, default=None)
    s.add_argument("--per-order", action="store_true")
    s.add_argument("--grid", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    bp = sub.add_parser("bounds").add_subparsers(dest="action", required=True)
    f1 = bp.add_parser("fig1", help="J versus J_B study")
    f1.add_argument("--n", type=int, nargs="+", default=[256, 1000])
    f1.add_argument("--nw", type=float, default=4.0)
    f1.add_argument("--m", type=int, default=6)
    f1.add_argument("--draws", type=int, default=25)
    f1.add_argument("--seed", type=int, default=0)
    f1.add_argument("--out", required=True)
    f1.set_defaults(func=cmd_bounds_fig1)
    br = bp.add_parser("report", help="assembled bounds for a coefficient table")
    br.add_argument("--system", required=True)
    br.add_argument("--ho-scale", type=float, default=None)
    br.add_argument("--nw", type=float, default=4.0)
    br.add_argument("--k", type=int, default=1)
    br.add_argument("--m", type=int, default=1)
    br.add_argument("--f", type=float, default=0.0, help="frequency in cycles/sample")
    br.add_argument("--out", required=True)
    br.set_defaults(func=cmd_bounds_report)

    ip = sub.add_parser("input").add_subparsers(dest="action", required=True)
    ig = ip.add_parser("gen", help="generate one input record")
    ig.add_argument("--class", dest="input_class", required=True,
                    choices=("gaussian_white", "m_sequence", "ssr", "modulated_dpss"))
    ig.add_argument("--energy", type=float, required=True)
    ig.add_argument("--w-hz", type=float, default=0.5)
    ig.add_argument("--center-hz", type=float, default=2.0)
    ig.add_argument("--order", type=int, default=None)
    ig.add_argument("--n", type=int, default=240)
    ig.add_argument("--dt", type=float, default=1.0 / 30.0)
    ig.add_argument("--seed", type=int, default=0)
    ig.add_argument("--out", required=True)
    ig.set_defaults(func=cmd_input_gen)

    d = sub.add_parser("detect", help="inner-product detection over output files")
    d.add_argument("--outputs", required=True)
    d.add_argument("--probes", required=True)
    d.add_argument("--null-label", default="null")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    i = sub.add_parser("identify", help="least-squares kernel identification")
    i.add_argument("--input", required=True)
    i.add_argument("--output", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--w-hz", type=float, default=None)
    i.add_argument("--center-hz", type=float, default=2.0)
    i.set_defaults(func=cmd_identify)

    hp = sub.add_parser("harness").add_subparsers(dest="action", required=True)
    hr = hp.add_parser("run", help="run the detection sweep from a config file")
    hr.add_argument("--config", required=True)
    hr.add_argument("--out", required=True)
    hr.add_argument("--fig1", action="store_true", help="also run the J study")
    hr.set_defaults(func=cmd_harness_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ParameterError, ResolutionError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
