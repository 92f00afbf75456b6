"""Configuration files and run output.

Config files hold ``key = value`` lines; ``#`` starts a comment.  Output
directories contain ``series.csv``, ``snapshots.jsonl`` and
``manifest.json``; every float is written with 17 significant digits so a
file read back reproduces the in-memory values exactly.
"""

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .audit import field_quantities
from .circle import CircleGrid, Mat3Field
from .errors import ConfigError
from .flow import FlowConfig, FlowState
from .presets import PRESETS, describe, preset_alpha

FORMAT_VERSION = "hsflow-output/1"

SERIES_COLUMNS = (
    "t",
    "v",
    "torsion_max",
    "riccati_envelope",
    "detQ_err_max",
    "cohom_drift_max",
    "trQ_max",
    "skew_drift_max",
    "min_eig_beta",
    "qhat_dist",
    "qhat_prime_inf",
    "curv_max",
)

ALPHA_KEYS = tuple(f"a{i + 1}{j + 1}" for i in range(3) for j in range(3))

# config key -> FlowConfig attribute
_CONFIG_KEYS = {
    "N": "N",
    "scheme": "scheme",
    "cflSafety": "cfl_safety",
    "dtMax": "dt_max",
    "tEnd": "t_end",
    "stopTol": "stop_tol",
    "outputEvery": "output_every",
    "renormalizeQ": "renormalize_q",
    "dealias": "dealias",
    "spectralFilter": "spectral_filter",
}


def fmt(x):
    """17-significant-digit text form of a float (``inf``/``nan`` spelled out)."""
    return format(float(x), ".17g")


@dataclass
class RunSpec:
    """A flow configuration together with the choice of initial data."""

    config: FlowConfig = field(default_factory=FlowConfig)
    preset: str = "cosine"
    amplitude: float = 0.5
    constant: tuple = None
    snapshot: str = None

    def initial_data(self):
        grid = CircleGrid(self.config.N)
        if self.snapshot is not None:
            states = read_snapshots(self.snapshot)
            if not states:
                raise ConfigError(f"snapshot file {self.snapshot} is empty")
            alpha = states[-1].alpha_field
            if alpha.grid != grid:
                raise ConfigError(
                    f"snapshot has {alpha.grid.n} nodes but the config asks for N={grid.n}"
                )
            return alpha
        return preset_alpha(self.preset, grid, self.amplitude, self.constant)

    def descriptor(self):
        if self.snapshot is not None:
            return {"snapshot": str(self.snapshot)}
        return describe(self.preset, self.amplitude, self.constant)


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    return int(text, 10)


def _parse_value(attr, text):
    kind = {f.name: f.type for f in fields(FlowConfig)}[attr]
    if kind in (bool, "bool"):
        return _parse_bool(text)
    if kind in (int, "int"):
        return _parse_int(text)
    if kind in (float, "float"):
        return float(text)
    return text


def parse_config(text):
    """Parse config text into a :class:`RunSpec`.

    Unknown keys, malformed values and values rejected by
    :class:`FlowConfig` raise :class:`ConfigError` carrying the line number.
    """
    values, data = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        try:
            if key in _CONFIG_KEYS:
                attr = _CONFIG_KEYS[key]
                values[attr] = _parse_value(attr, value)
                FlowConfig(**{attr: values[attr]})  # field checks are independent
            elif key == "preset":
                if value not in PRESETS:
                    raise ValueError(f"unknown preset {value!r}")
                data["preset"] = value
            elif key == "amplitude":
                data["amplitude"] = float(value)
            elif key == "constant":
                data["constant"] = tuple(float(v) for v in value.replace(",", " ").split())
                if len(data["constant"]) not in (3, 9):
                    raise ValueError("constant needs 3 or 9 numbers")
            elif key == "snapshot":
                data["snapshot"] = value
            else:
                raise ConfigError(f"unknown key {key!r}", line=lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", line=lineno) from None
    return RunSpec(FlowConfig(**values), **data)


def format_config(spec):
    """Text that :func:`parse_config` maps back to ``spec``."""
    cfg = spec.config
    lines = []
    for key, attr in _CONFIG_KEYS.items():
        v = getattr(cfg, attr)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = fmt(v)
        lines.append(f"{key} = {v}")
    if spec.snapshot is not None:
        lines.append(f"snapshot = {spec.snapshot}")
    else:
        lines.append(f"preset = {spec.preset}")
        lines.append(f"amplitude = {fmt(spec.amplitude)}")
        if spec.constant is not None:
            lines.append("constant = " + " ".join(fmt(c) for c in spec.constant))
    return "\n".join(lines) + "\n"


def config_echo(spec):
    """Config as a JSON-ready dict keyed like the config file."""
    out = {}
    for key, attr in _CONFIG_KEYS.items():
        v = getattr(spec.config, attr)
        out[key] = fmt(v) if isinstance(v, float) and not math.isfinite(v) else v
    return out


def write_series(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for r in records:
            w.writerow([fmt(getattr(r, c)) for c in SERIES_COLUMNS])


def read_series(path):
    """Rows of ``series.csv`` as a dict of float arrays keyed by column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in row] for row in body]).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def snapshot_lines(state, scheme="spectral"):
    """One JSON object per node: ``t, k, x0``, the nine alpha entries, ``V`` and ``T``."""
    v, _, _, _, torsion = field_quantities(state, scheme)
    alpha = state.alpha
    for k, x in enumerate(state.grid.x):
        parts = [f'"t": {fmt(state.t)}', f'"k": {k}', f'"x0": {fmt(x)}']
        parts += [f'"{name}": {fmt(a)}' for name, a in zip(ALPHA_KEYS, alpha[k].ravel())]
        parts += [f'"V": {fmt(v[k])}', f'"T": {fmt(torsion[k])}']
        yield "{" + ", ".join(parts) + "}"


def write_snapshots(path, trajectory, scheme="spectral"):
    with open(path, "w") as fh:
        for state in trajectory:
            for line in snapshot_lines(state, scheme):
                fh.write(line + "\n")


def read_snapshots(path):
    """States stored in a snapshot file, in file order."""
    groups = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc.msg}", line=lineno) from None
            groups.setdefault(obj["t"], []).append(obj)
    states = []
    for t, rows in groups.items():
        rows.sort(key=lambda r: r["k"])
        alpha = np.array([[r[name] for name in ALPHA_KEYS] for r in rows]).reshape(-1, 3, 3)
        grid = CircleGrid(len(rows))
        states.append(FlowState.from_alpha(Mat3Field(grid, alpha), t=t))
    return states


def write_manifest(path, spec, out_dir, extra=None):
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config_echo(spec),
        "initial_data": spec.descriptor(),
        "out_dir": str(out_dir),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def write_run(out_dir, spec, result):
    """Write ``series.csv``, ``snapshots.jsonl`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series(out / "series.csv", result.records)
    write_snapshots(out / "snapshots.jsonl", result.trajectory, spec.config.scheme)
    extra = {"converged": result.converged, "t_final": fmt(result.t_final)}
    return write_manifest(out / "manifest.json", spec, out, extra)
