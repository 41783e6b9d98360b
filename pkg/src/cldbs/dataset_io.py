"""Run files, manifests and dataset generation.

A run file is a CSV with a fixed six-column header; numbers are written with
17 significant digits so that every float64 reads back bit-exact. The
manifest lists every run with a SHA-256 digest of its file bytes and is
written last, atomically.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .control import SimulationTrace, run_closed_loop
from .errors import FormatError, GenerationError
from .plant import build_plant
from .timeseries import TimeSeries

MANIFEST_VERSION = "1.0"
MANIFEST_NAME = "manifest.json"

# CSV column -> (trace attribute, unit)
RUN_COLUMNS = {
    "time_s": (None, "s"),
    "lfp_raw_uv": ("lfp_raw", "uV"),
    "lfp_beta_uv": ("lfp_beta", "uV"),
    "beta_arv_uv": ("beta_arv", "uV"),
    "dbs_amplitude_ma": ("dbs_amplitude", "mA"),
    "dbs_current_ma": ("dbs_current", "mA"),
}
TIME_TOLERANCE = 1e-9


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def run_csv_bytes(trace: SimulationTrace) -> bytes:
    cols = [trace.times] + [getattr(trace, attr).samples for attr, _ in list(RUN_COLUMNS.values())[1:]]
    buf = io.StringIO()
    buf.write(",".join(RUN_COLUMNS) + "\n")
    for row in zip(*cols):
        buf.write(",".join(map(_fmt, row)) + "\n")
    return buf.getvalue().encode("ascii")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_run(trace: SimulationTrace, path) -> str:
    """Write ``trace`` as a run file; return the SHA-256 hex digest of its bytes."""
    if not isinstance(trace, SimulationTrace):
        raise TypeError(f"expected a SimulationTrace, got {type(trace).__name__}")
    # re-check alignment in case the series were swapped after construction
    SimulationTrace.__post_init__(trace)
    data = run_csv_bytes(trace)
    _atomic_write(Path(path), data)
    return hashlib.sha256(data).hexdigest()


def read_run(path) -> SimulationTrace:
    """Parse a run file; the sampling rate comes from the time column."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file, expected header {','.join(RUN_COLUMNS)}")
    header = rows[0]
    expected = list(RUN_COLUMNS)
    missing = [c for c in expected if c not in header]
    extra = [c for c in header if c not in expected]
    if missing:
        raise FormatError(f"{path}: row 1: missing column(s) {', '.join(missing)}")
    if extra:
        raise FormatError(f"{path}: row 1: unexpected column(s) {', '.join(extra)}")
    if header != expected:
        raise FormatError(f"{path}: row 1: columns out of order, expected {','.join(expected)}")
    data = np.empty((len(rows) - 1, len(expected)))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != len(expected):
            raise FormatError(f"{path}: row {line}: expected {len(expected)} fields, got {len(row)}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise FormatError(f"{path}: row {line}: {exc}") from None
        if not np.all(np.isfinite(data[i])):
            raise FormatError(f"{path}: row {line}: non-finite value")
    if data.shape[0] < 2:
        raise FormatError(f"{path}: at least two data rows are needed to infer the sampling rate")
    t = data[:, 0]
    steps = np.diff(t)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        raise FormatError(f"{path}: row {bad[0] + 3}: time is not strictly increasing")
    dt = (t[-1] - t[0]) / (t.size - 1)
    off = np.abs(t - (t[0] + np.arange(t.size) * dt))
    worst = int(np.argmax(off))
    if off[worst] > TIME_TOLERANCE:
        raise FormatError(f"{path}: row {worst + 2}: time deviates from uniform spacing by {off[worst]:.3g} s")
    fs = float(format(1.0 / dt, ".12g"))
    cols = {}
    for j, (name, (attr, unit)) in enumerate(RUN_COLUMNS.items()):
        if attr is not None:
            cols[attr] = TimeSeries(data[:, j], fs, float(t[0]), unit)
    return SimulationTrace(**cols, metadata={"source": str(path)})


@dataclass(frozen=True)
class ManifestEntry:
    run_id: str
    severity: str
    scenario: str
    seed: int
    plant_mode: str
    fs: float
    duration_s: float
    path: str
    digest: str


@dataclass(frozen=True)
class DatasetManifest:
    version: str
    generated_at: str
    config_digest: str
    runs: tuple = field(default_factory=tuple)

    def to_json(self) -> str:
        d = asdict(self)
        d["runs"] = [asdict(r) for r in self.runs]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        try:
            d = json.loads(text)
            runs = tuple(ManifestEntry(**r) for r in d.pop("runs"))
            return cls(runs=runs, **d)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"malformed manifest: {exc}") from None


def run_id(severity: str, scenario: str, seed: int) -> str:
    return f"{severity}__{scenario}__seed{seed}"


def _plan(config):
    ds = config.dataset
    if not (ds.severities and ds.scenarios and ds.seeds):
        raise GenerationError("dataset spec is empty: severities, scenarios and seeds must all be non-empty")
    jobs, seen = [], set()
    for severity in ds.severities:
        for scenario in ds.scenarios:
            for seed in ds.seeds:
                rid = run_id(severity, scenario, seed)
                if rid in seen:
                    raise GenerationError(f"duplicate run id {rid}")
                seen.add(rid)
                jobs.append((rid, severity, scenario, seed))
    return jobs


def simulate_run(config, severity: str, scenario: str, seed: int) -> SimulationTrace:
    """One closed-loop (or DBS-off) run of the configured plant."""
    plant_cfg = replace(config.plant, severity=severity, seed=seed)
    plant = build_plant(plant_cfg)
    ctrl = config.controller.build(scenario)
    meta = {"config_digest": config.digest(), "severity": severity}
    return run_closed_loop(plant, ctrl, config.duration, config.dsp, config.controller.waveform(), meta)


def _generate_one(args):
    config, out_dir, rid, severity, scenario, seed = args
    trace = simulate_run(config, severity, scenario, seed)
    rel = f"runs/{rid}.csv"
    digest = write_run(trace, Path(out_dir) / rel)
    return ManifestEntry(rid, severity, scenario, seed, config.plant.mode, trace.fs, len(trace) / trace.fs, rel, digest)


def generate_dataset(config, out_dir, workers: int | None = None, timestamp: str | None = None) -> DatasetManifest:
    """Simulate every (severity, scenario, seed) of ``config.dataset`` into ``out_dir``."""
    jobs = _plan(config)
    out_dir = Path(out_dir)
    try:
        (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    args = [(config, str(out_dir), *job) for job in jobs]
    workers = workers or config.dataset.workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_generate_one, args))
    else:
        entries = [_generate_one(a) for a in args]
    manifest = DatasetManifest(
        version=MANIFEST_VERSION,
        generated_at=timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        config_digest=config.digest(),
        runs=tuple(entries),
    )
    _atomic_write(out_dir / MANIFEST_NAME, manifest.to_json().encode())
    return manifest


def load_manifest(path) -> DatasetManifest:
    return DatasetManifest.from_json(Path(path).read_text())


def validate_manifest(path) -> DatasetManifest:
    """Check run-id uniqueness, file presence and every digest; raise :class:`FormatError`."""
    path = Path(path)
    manifest = load_manifest(path)
    ids = [r.run_id for r in manifest.runs]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise FormatError(f"{path}: duplicate run id(s) {sorted(dup)}")
    for r in manifest.runs:
        f = path.parent / r.path
        if not f.is_file():
            raise FormatError(f"{path}: run {r.run_id}: missing file {r.path}")
        actual = sha256_file(f)
        if actual != r.digest:
            raise FormatError(f"{path}: run {r.run_id}: digest mismatch ({actual} != {r.digest})")
    return manifest
