"""Command-line interface: ``multiport simulate | fit | sweep | synth | report``.

Exit codes: 0 success, 1 computational failure (invariant violation, fit
failure), 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from .characterization import (
    FOURPORT_FRACTIONS,
    TRITTER_FRACTIONS,
    FitResult,
    add_intensity_noise,
    compute_fractions,
    fit_fourport_eta,
    fit_fourport_phi,
    fit_tritter,
    predict_intensities,
)
from .devices import FourPortParams, TritterCoupling, fourport_closed_form, tritter_unitary
from .exceptions import FitError, SchemaError, UndefinedVisibilityError, ValidationError
from .hom import DipFitError, fit_scans, scans_to_visibility_matrix, synthesize_device_scans
from .two_photon import PortPair, VisibilityMatrix, visibility_matrix, visibility_sweep

OUTPUT_DIR_ENV = "MULTIPORT_OUTPUT_DIR"


def _out_stem(out):
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    if path.suffix in (".json", ".csv"):
        path = path.with_suffix("")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, payload: dict | None, tables: dict):
    """Write JSON and/or CSV outputs to ``--out`` or stdout."""
    stem = _out_stem(args.out)
    want_json = args.format in ("json", "both") and payload is not None
    want_csv = args.format in ("csv", "both")
    if stem is None:
        if want_json:
            sys.stdout.write(mio.dumps(payload))
        if want_csv:
            for i, (name, text) in enumerate(tables.items()):
                if i or want_json:
                    sys.stdout.write("\n")
                if len(tables) > 1:
                    sys.stdout.write(f"# {name}\n")
                sys.stdout.write(text)
        return
    if want_json:
        stem.with_suffix(".json").write_text(mio.dumps(payload))
    if want_csv:
        for name, text in tables.items():
            suffix = f"_{name}" if len(tables) > 1 else ""
            Path(f"{stem}{suffix}.csv").write_text(text)


def _phi(args):
    return args.phi * math.pi if args.phi_pi else args.phi


def _device_unitary(args):
    if args.device == "tritter":
        params = TritterCoupling(args.g_bar, args.G_bar, args.beta)
        return {"g_bar": params.g_bar, "G_bar": params.G_bar, "beta": params.beta}, tritter_unitary(params)
    params = FourPortParams(args.eta, _phi(args))
    return {"eta": params.eta, "phi": params.phi}, fourport_closed_form(params)


# subcommands ------------------------------------------------------------------


def cmd_simulate(args):
    params, u = _device_unitary(args)
    vm = visibility_matrix(u)
    payload = {
        "schema_version": mio.SCHEMA_VERSION,
        "device": args.device,
        "parameters": params,
        "transfer_matrix": mio.transfer_matrix_to_dict(u),
        "intensity_matrix": [[float(x) for x in row] for row in u.intensities],
        "visibilities": mio.visibility_matrix_to_dict(vm),
    }
    _emit(args, payload, {"intensity": mio.intensity_csv(u), "visibilities": mio.visibility_csv(vm)})
    return 0


def cmd_sweep(args):
    sweep = visibility_sweep(args.ratio, args.g_max, args.points)
    payload = {
        "schema_version": mio.SCHEMA_VERSION,
        "ratio": args.ratio,
        "points": [{"g_bar": g, "visibilities": mio.visibility_matrix_to_dict(vm)} for g, vm in sweep],
    }
    _emit(args, payload, {"sweep": mio.sweep_csv(sweep)})
    return 0


def cmd_synth(args):
    params, u = _device_unitary(args)
    if not args.pair_rate > 0:
        raise ValidationError(f"pair rate must be positive, got {args.pair_rate}")
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xC1A55]))
    n = u.n_modes
    losses_in = losses_out = None
    if args.loss_spread > 0:
        losses_in = rng.uniform(1.0 - args.loss_spread, 1.0, n)
        losses_out = rng.uniform(1.0 - args.loss_spread, 1.0, n)
    data = predict_intensities(u, losses_in, losses_out, args.source_power)
    if args.intensity_noise > 0:
        data = add_intensity_noise(data, args.intensity_noise, rng)
    delays = np.linspace(-args.span, args.span, args.points)
    scans = synthesize_device_scans(u, args.pair_rate, args.width, delays, seed=args.seed)
    meta = {"generator": "multiport synth", "seed": args.seed, "true_parameters": params}
    m = mio.MeasurementFile(args.device, data, scans, None, meta)
    _emit(args, m.to_dict(), {})
    return 0


def _measured_from_scans(m):
    fits = fit_scans(m.scans)
    vm = scans_to_visibility_matrix(m.scans, m.n_modes, fits)
    rows = []
    for s, f in fits:
        row = {"input": list(s.input_pair), "output": list(s.output_pair)}
        if isinstance(f, DipFitError):
            row["error"] = str(f)
        else:
            row.update(visibility=f.visibility, baseline=f.baseline, center=f.center, width=f.width, uncertainties=f.uncertainties)
        rows.append(row)
    return vm, rows


def _need_intensities(m, stage):
    if m.intensities is None:
        raise SchemaError(f"stage '{stage}' requires the 'intensities' field")
    return m.intensities


def _empty_prediction(n):
    return VisibilityMatrix(n)


def cmd_fit(args):
    m = mio.load_measurement(args.input)
    stage = args.stage
    expected = "tritter" if stage == "tritter" else ("fourport" if stage.startswith("fourport") else m.device)
    if m.device != expected:
        raise SchemaError(f"stage '{stage}' needs a {expected} measurement, file is '{m.device}'")
    measured, dip_fits = None, []
    if stage == "tritter":
        fr = compute_fractions(_need_intensities(m, stage), TRITTER_FRACTIONS)
        result = fit_tritter(fr)
        u = tritter_unitary((result.parameters["g_bar"], result.parameters["G_bar"]))
        predicted = visibility_matrix(u)
        if m.scans:
            measured, dip_fits = _measured_from_scans(m)
        elif m.visibilities is not None:
            measured = m.visibilities
    elif stage == "fourport-eta":
        fr = compute_fractions(_need_intensities(m, stage), FOURPORT_FRACTIONS)
        result = fit_fourport_eta(fr)
        result.notes.append(f"predicted visibilities use phi = {args.phi} (not determined by intensities)")
        predicted = visibility_matrix(fourport_closed_form((result.parameters["eta"], args.phi)))
    elif stage == "fourport-phi":
        if args.eta is not None:
            eta_result = FitResult({"eta": args.eta}, 0.0, 0, True, notes=["eta supplied on the command line"])
        else:
            eta_result = fit_fourport_eta(compute_fractions(_need_intensities(m, stage), FOURPORT_FRACTIONS))
        eta = eta_result.parameters["eta"]
        ip = PortPair(*args.input_pair)
        if m.visibilities is not None:
            source = m.visibilities
        elif m.scans:
            source, dip_fits = _measured_from_scans(m)
        else:
            raise SchemaError("stage 'fourport-phi' requires 'visibilities' or 'scans'")
        phi_result = fit_fourport_phi(eta, source.for_input(ip))
        result = FitResult(
            {"eta": eta, "phi": phi_result.parameters["phi"]},
            phi_result.objective_value,
            phi_result.iterations,
            phi_result.converged,
            weighted=phi_result.weighted,
            ambiguous=phi_result.ambiguous,
            alternatives=phi_result.alternatives,
            notes=eta_result.notes + phi_result.notes + [f"phi fitted from input pair {tuple(ip)}"],
        )
        predicted = visibility_matrix(fourport_closed_form((eta, result.parameters["phi"])))
        measured = source
    else:  # dips
        if not m.scans:
            raise SchemaError("stage 'dips' requires the 'scans' field")
        measured, dip_fits = _measured_from_scans(m)
        result = None
        predicted = _empty_prediction(m.n_modes)
        if m.device == "tritter" and m.intensities is not None:
            result = fit_tritter(compute_fractions(m.intensities, TRITTER_FRACTIONS))
            predicted = visibility_matrix(tritter_unitary((result.parameters["g_bar"], result.parameters["G_bar"])))
    report = mio.ReportBundle(stage, m.device, result, predicted, measured, dip_fits)
    _emit(args, report.to_dict(), {"report": mio.report_csv(report)})
    return 0


def cmd_report(args):
    report = mio.load_report(args.input)
    _emit(args, report.to_dict(), {"report": mio.report_csv(report)})
    return 0


# parser -----------------------------------------------------------------------


def _common(p, default_format="json"):
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--out", help="output path stem; .json / .csv suffixes are added")
    p.add_argument("--format", choices=("json", "csv", "both"), default=default_format)


def _device_args(sub, name, help_text):
    p = sub.add_parser(name, help=help_text)
    dev = p.add_subparsers(dest="device", required=True)
    t = dev.add_parser("tritter")
    t.add_argument("--g-bar", dest="g_bar", type=float, required=True)
    t.add_argument("--G-bar", dest="G_bar", type=float, required=True)
    t.add_argument("--beta", type=float, default=0.0)
    f = dev.add_parser("fourport")
    f.add_argument("--eta", type=float, required=True)
    f.add_argument("--phi", type=float, default=0.0, help="inner-arm phase (radians)")
    f.add_argument("--phi-pi", action="store_true", help="interpret --phi in units of pi")
    return t, f


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for p in _device_args(sub, "simulate", "transfer matrix, |U|^2 and visibilities of a device"):
        _common(p, "csv")
        p.set_defaults(func=cmd_simulate)

    for p in _device_args(sub, "synth", "synthesize a measurement file"):
        _common(p)
        p.add_argument("--pair-rate", type=float, default=2e4, help="photon pairs per second")
        p.add_argument("--width", type=float, default=1.0, help="dip width (ps)")
        p.add_argument("--span", type=float, default=5.0, help="delay half-range (ps)")
        p.add_argument("--points", type=int, default=41)
        p.add_argument("--source-power", type=float, default=1.0)
        p.add_argument("--intensity-noise", type=float, default=0.01, help="relative intensity noise")
        p.add_argument("--loss-spread", type=float, default=0.3, help="per-port losses drawn from [1-s, 1]")
        p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit device parameters from a measurement file")
    p.add_argument("input")
    p.add_argument("--stage", choices=("tritter", "fourport-eta", "fourport-phi", "dips"), required=True)
    p.add_argument("--eta", type=float, help="fourport-phi: use this eta instead of fitting it")
    p.add_argument("--phi", type=float, default=0.0, help="fourport-eta: phase for predicted visibilities")
    p.add_argument("--input-pair", type=int, nargs=2, default=(2, 3), metavar=("I", "J"))
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="tritter visibilities versus coupling")
    p.add_argument("--ratio", type=float, required=True, help="G_bar / g_bar")
    p.add_argument("--g-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=201)
    _common(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="re-render a report.json")
    p.add_argument("input")
    _common(p, "csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FitError, UndefinedVisibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
