"""JSON measurement and report files plus plot-ready CSV tables.

All port labels in files are 1-based. Complex numbers are stored as
``[re, im]`` pairs; JSON floats are written with ``repr`` precision so that
parse(serialize(x)) reproduces ``x`` exactly. CSV numbers use 9 significant
digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .characterization import FitResult, IntensityDataset, IntensityRecord
from .exceptions import SchemaError
from .hom import DipScan
from .linalg import TransferMatrix
from .two_photon import PortPair, VisibilityMatrix

SCHEMA_VERSION = "1.0"
SUPPORTED_VERSIONS = {"1.0"}
DEVICE_MODES = {"tritter": 3, "fourport": 4}


def _require(d, key, where):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in d:
        raise SchemaError(f"{where}: missing required field '{key}'")
    return d[key]


def _pair(x, where) -> PortPair:
    try:
        a, b = x
        return PortPair(int(a), int(b))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: invalid port pair {x!r}") from exc


def fmt_number(x) -> str:
    """CSV number formatting: 9 significant digits, empty cell for missing."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


# complex matrices -----------------------------------------------------------


def complex_matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def complex_matrix_from_dict(d, where="matrix") -> np.ndarray:
    rows, cols = int(_require(d, "rows", where)), int(_require(d, "cols", where))
    entries = _require(d, "entries", where)
    if len(entries) != rows * cols:
        raise SchemaError(f"{where}: expected {rows * cols} entries, got {len(entries)}")
    return np.array([complex(re, im) for re, im in entries], dtype=complex).reshape(rows, cols)


def transfer_matrix_to_dict(u: TransferMatrix) -> dict:
    d = complex_matrix_to_dict(u.u)
    d["convention"] = "row=input,col=output"
    return d


def transfer_matrix_from_dict(d) -> TransferMatrix:
    return TransferMatrix(complex_matrix_from_dict(d, "transfer_matrix"))


# intensities, scans, visibilities, fits -------------------------------------


def intensities_to_dict(data: IntensityDataset) -> dict:
    return {
        "n_modes": data.n_modes,
        "records": [
            {"input": r.input_port, "output": r.output_port, "mean": r.mean, "std": r.std} for r in data.records
        ],
    }


def intensities_from_dict(d) -> IntensityDataset:
    n = int(_require(d, "n_modes", "intensities"))
    recs = []
    for i, r in enumerate(_require(d, "records", "intensities")):
        where = f"intensities.records[{i}]"
        recs.append(
            IntensityRecord(
                int(_require(r, "input", where)),
                int(_require(r, "output", where)),
                float(_require(r, "mean", where)),
                float(r.get("std", 0.0)),
            )
        )
    return IntensityDataset(n, tuple(recs))


def scan_to_dict(s: DipScan) -> dict:
    return {
        "input_pair": list(s.input_pair),
        "output_pair": list(s.output_pair),
        "delays": [float(t) for t in s.delays],
        "counts": [int(c) for c in s.counts],
        "accumulation_time": float(s.accumulation_time),
    }


def scan_from_dict(d, where="scan") -> DipScan:
    return DipScan(
        _pair(_require(d, "input_pair", where), where),
        _pair(_require(d, "output_pair", where), where),
        np.asarray(_require(d, "delays", where), float),
        np.asarray(_require(d, "counts", where), np.int64),
        float(d.get("accumulation_time", 1.0)),
    )


def visibility_matrix_to_dict(vm: VisibilityMatrix) -> dict:
    entries = []
    for ip, op in vm.keys():
        e = {"input": list(ip), "output": list(op), "value": float(vm.values[(ip, op)])}
        sig = vm.sigma(ip, op)
        if sig is not None:
            e["sigma"] = float(sig)
        entries.append(e)
    undefined = [
        {"input": list(ip), "output": list(op), "reason": reason} for (ip, op), reason in sorted(vm.undefined.items())
    ]
    return {
        "n_modes": vm.n_modes,
        "input_pairs": [list(p) for p in vm.input_pairs],
        "output_pairs": [list(p) for p in vm.output_pairs],
        "entries": entries,
        "undefined": undefined,
    }


def visibility_matrix_from_dict(d, where="visibilities") -> VisibilityMatrix:
    n = int(_require(d, "n_modes", where))
    values, unc, undefined = {}, {}, {}
    for i, e in enumerate(_require(d, "entries", where)):
        w = f"{where}.entries[{i}]"
        key = (_pair(_require(e, "input", w), w), _pair(_require(e, "output", w), w))
        values[key] = float(_require(e, "value", w))
        if "sigma" in e:
            unc[key] = float(e["sigma"])
    for e in d.get("undefined", []):
        key = (_pair(e["input"], where), _pair(e["output"], where))
        undefined[key] = e.get("reason", "")
    ins = [_pair(p, where) for p in d.get("input_pairs", sorted({k[0] for k in values}))]
    outs = [_pair(p, where) for p in d.get("output_pairs", sorted({k[1] for k in values}))]
    return VisibilityMatrix(n, tuple(ins), tuple(outs), values, unc or None, undefined)


def fit_result_to_dict(r: FitResult) -> dict:
    return {
        "parameters": {k: float(v) for k, v in r.parameters.items()},
        "objective_value": float(r.objective_value),
        "iterations": int(r.iterations),
        "converged": bool(r.converged),
        "covariance_estimate": None
        if r.covariance_estimate is None
        else [[float(x) for x in row] for row in np.asarray(r.covariance_estimate)],
        "weighted": bool(r.weighted),
        "ambiguous": bool(r.ambiguous),
        "alternatives": r.alternatives,
        "notes": list(r.notes),
    }


def fit_result_from_dict(d) -> FitResult:
    cov = d.get("covariance_estimate")
    return FitResult(
        parameters=dict(_require(d, "parameters", "fitted_parameters")),
        objective_value=float(d.get("objective_value", 0.0)),
        iterations=int(d.get("iterations", 0)),
        converged=bool(d.get("converged", True)),
        covariance_estimate=None if cov is None else np.asarray(cov, float),
        weighted=bool(d.get("weighted", True)),
        ambiguous=bool(d.get("ambiguous", False)),
        alternatives=list(d.get("alternatives", [])),
        notes=list(d.get("notes", [])),
    )


# measurement and report files -----------------------------------------------


@dataclass
class MeasurementFile:
    """Classical intensities and/or dip scans (and optionally pre-extracted visibilities) for one device."""

    device: str
    intensities: IntensityDataset | None = None
    scans: list = field(default_factory=list)
    visibilities: VisibilityMatrix | None = None
    metadata: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version not in SUPPORTED_VERSIONS:
            raise SchemaError(f"unsupported schema_version {self.schema_version!r}")
        if self.device not in DEVICE_MODES:
            raise SchemaError(f"device must be one of {sorted(DEVICE_MODES)}, got {self.device!r}")
        n = self.n_modes
        if self.intensities is not None and self.intensities.n_modes != n:
            raise SchemaError(f"intensities declare {self.intensities.n_modes} modes, device has {n}")
        for s in self.scans:
            if max(s.input_pair.b, s.output_pair.b) > n:
                raise SchemaError(f"scan {s.key} uses a port outside 1..{n}")
        if self.visibilities is not None and self.visibilities.n_modes != n:
            raise SchemaError(f"visibilities declare {self.visibilities.n_modes} modes, device has {n}")

    @property
    def n_modes(self) -> int:
        return DEVICE_MODES[self.device]

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "device": self.device, "metadata": self.metadata}
        if self.intensities is not None:
            d["intensities"] = intensities_to_dict(self.intensities)
        if self.scans:
            d["scans"] = [scan_to_dict(s) for s in self.scans]
        if self.visibilities is not None:
            d["visibilities"] = visibility_matrix_to_dict(self.visibilities)
        return d

    @classmethod
    def from_dict(cls, d) -> "MeasurementFile":
        version = _require(d, "schema_version", "measurement")
        device = _require(d, "device", "measurement")
        intens = intensities_from_dict(d["intensities"]) if d.get("intensities") is not None else None
        scans = [scan_from_dict(s, f"scans[{i}]") for i, s in enumerate(d.get("scans") or [])]
        vis = visibility_matrix_from_dict(d["visibilities"]) if d.get("visibilities") is not None else None
        return cls(device, intens, scans, vis, dict(d.get("metadata") or {}), version)


@dataclass
class ReportBundle:
    """Fitted parameters with predicted versus measured visibilities."""

    stage: str
    device: str
    fitted_parameters: FitResult | None
    predicted_visibilities: VisibilityMatrix
    measured_visibilities: VisibilityMatrix | None = None
    dip_fits: list = field(default_factory=list)

    def comparisons(self) -> list:
        """``(input, output, predicted, measured, sigma, delta, pull)`` where both sides exist."""
        rows = []
        if self.measured_visibilities is None:
            return rows
        for key in self.measured_visibilities.keys():
            if key not in self.predicted_visibilities.values:
                continue
            pred = self.predicted_visibilities.values[key]
            meas = self.measured_visibilities.values[key]
            sig = self.measured_visibilities.sigma(*key)
            delta = meas - pred
            pull = delta / sig if sig else None
            rows.append((key[0], key[1], pred, meas, sig, delta, pull))
        return rows

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "stage": self.stage,
            "device": self.device,
            "fitted_parameters": None if self.fitted_parameters is None else fit_result_to_dict(self.fitted_parameters),
            "predicted_visibilities": visibility_matrix_to_dict(self.predicted_visibilities),
            "measured_visibilities": None
            if self.measured_visibilities is None
            else visibility_matrix_to_dict(self.measured_visibilities),
            "comparisons": [
                {"input": list(ip), "output": list(op), "predicted": p, "measured": m, "sigma": s, "delta": dl, "pull": pl}
                for ip, op, p, m, s, dl, pl in self.comparisons()
            ],
            "dip_fits": self.dip_fits,
        }

    @classmethod
    def from_dict(cls, d) -> "ReportBundle":
        version = _require(d, "schema_version", "report")
        if version not in SUPPORTED_VERSIONS:
            raise SchemaError(f"unsupported schema_version {version!r}")
        fp = d.get("fitted_parameters")
        mv = d.get("measured_visibilities")
        return cls(
            stage=_require(d, "stage", "report"),
            device=_require(d, "device", "report"),
            fitted_parameters=None if fp is None else fit_result_from_dict(fp),
            predicted_visibilities=visibility_matrix_from_dict(_require(d, "predicted_visibilities", "report")),
            measured_visibilities=None if mv is None else visibility_matrix_from_dict(mv, "measured_visibilities"),
            dip_fits=list(d.get("dip_fits", [])),
        )


def dumps(payload: dict) -> str:
    """Deterministic JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def load_measurement(path) -> MeasurementFile:
    return MeasurementFile.from_dict(load_json(path))


def save_measurement(m: MeasurementFile, path):
    Path(path).write_text(dumps(m.to_dict()))


def load_report(path) -> ReportBundle:
    return ReportBundle.from_dict(load_json(path))


# CSV tables -----------------------------------------------------------------


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt_number(c) for c in row])
    return buf.getvalue()


def intensity_csv(u: TransferMatrix) -> str:
    """``|U|^2`` table: one row per input port, one column per output port."""
    p = u.intensities
    header = ["input"] + [f"out{k + 1}" for k in range(u.n_modes)]
    return _csv_text(header, [[str(j + 1)] + list(p[j]) for j in range(u.n_modes)])


def visibility_csv(vm: VisibilityMatrix) -> str:
    """Long-format visibility table; undefined entries leave ``value`` empty."""
    rows = []
    for ip in vm.input_pairs:
        for op in vm.output_pairs:
            key = (ip, op)
            rows.append([ip.label, op.label, vm.values.get(key), vm.sigma(ip, op)])
    return _csv_text(["input_pair", "output_pair", "visibility", "sigma"], rows)


def sweep_column(ip: PortPair, op: PortPair) -> str:
    return f"V_in{ip.label}_out{op.label}"


def sweep_csv(sweep) -> str:
    """Wide table: ``g_bar`` followed by one column per (input, output) combination."""
    if not sweep:
        return _csv_text(["g_bar"], [])
    first = sweep[0][1]
    keys = [(ip, op) for ip in first.input_pairs for op in first.output_pairs]
    header = ["g_bar"] + [sweep_column(*k) for k in keys]
    rows = [[g] + [vm.values.get(k) for k in keys] for g, vm in sweep]
    return _csv_text(header, rows)


def report_csv(report: ReportBundle) -> str:
    """Per-entry predicted vs measured table with deltas and pulls."""
    pred = report.predicted_visibilities
    meas = report.measured_visibilities
    keys = set(pred.values) | (set(meas.values) if meas is not None else set())
    rows = []
    for ip, op in sorted(keys):
        p = pred.values.get((ip, op))
        m = meas.values.get((ip, op)) if meas is not None else None
        s = meas.sigma(ip, op) if meas is not None else None
        delta = m - p if (m is not None and p is not None) else None
        pull = delta / s if (delta is not None and s) else None
        rows.append([ip.label, op.label, p, m, s, delta, pull])
    return _csv_text(["input_pair", "output_pair", "predicted", "measured", "sigma", "delta", "pull"], rows)


def read_csv_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
