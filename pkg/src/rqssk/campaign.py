"""Campaign configuration, job execution and result files.

A campaign is a YAML file::

    output_dir: results
    format: csv            # or json
    seed: 1
    workers: 1
    jobs:
      - name: sim64
        type: simulate     # simulate | analyze | moments | lambda_hist
        scheme: rqssk
        n_rx: 4
        n_ris: 64
        snr_db: {start: -26, stop: -18, step: 2}   # or an explicit list
      - name: gp64
        type: analyze
        quantity: abep_with_polarity
        method: gil_pelaez
        n_rx: 4
        n_ris: 64
        snr_db: [-26, -24, -22, -20, -18]

Every job writes one result file named after the job. Result files hold
no timestamps, so a re-run with the same seeds reproduces them byte for
byte; wall-clock times, versions and content hashes go to
``manifest.json``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .analytic import Case, Method, abep_no_polarity, abep_with_polarity, pep_ssk_mixture
from .errors import ConfigurationError
from .moments import empirical_moments
from .montecarlo import DEFAULT_BLOCK, DOMAIN_MOMENTS, Scheme, SimConfig, lambda_samples, run_ber
from .optimizer import LambdaMode
from .channel import RngStream

CURVE_COLUMNS = ("label", "snr_db", "value", "std_error", "n_trials")
FORMATS = ("csv", "json")
JOB_TYPES = ("simulate", "analyze", "moments", "lambda_hist")
QUANTITIES = ("abep_with_polarity", "abep_no_polarity", "pep")


class JobError(ConfigurationError):
    """Validation failure attributed to one job and one field."""

    def __init__(self, job, param, message):
        self.job = job
        super().__init__(param, f"job {job!r}: {message}")


@dataclass
class CurveRecord:
    label: str
    points: list = field(default_factory=list)

    def __post_init__(self):
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigurationError("snr_db", f"curve {self.label!r}: snr_db must be strictly increasing")


def fmt_number(x):
    """17 significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _curve_rows(records):
    for rec in records:
        for snr_db, value, std_error, n_trials in rec.points:
            yield rec.label, float(snr_db), float(value), float(std_error), int(n_trials)


def _json_rows(rows, columns):
    # hand-rolled so floats keep exactly 17 significant digits
    parts = []
    for row in rows:
        items = []
        for key, val in zip(columns, row):
            v = json.dumps(val) if isinstance(val, str) else fmt_number(val)
            items.append(f"{json.dumps(key)}: {v}")
        parts.append("  {" + ", ".join(items) + "}")
    return "[\n" + ",\n".join(parts) + ("\n" if parts else "") + "]\n"


def _csv_text(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt_number(v) for v in row])
    return buf.getvalue()


def _table_text(rows, columns, fmt):
    rows = list(rows)
    return _csv_text(rows, columns) if fmt == "csv" else _json_rows(rows, columns)


def _write(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_curves(records, path, fmt="csv"):
    """Write curve records to ``path`` as CSV or JSON; returns the path."""
    if fmt not in FORMATS:
        raise ConfigurationError("format", f"must be one of {FORMATS}, got {fmt!r}")
    return _write(path, _table_text(_curve_rows(records), CURVE_COLUMNS, fmt))


def load_curves(path):
    """Read a file written by :func:`emit_curves` back into records."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        rows = [tuple(r[c] for c in CURVE_COLUMNS) for r in json.loads(text)]
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != CURVE_COLUMNS:
            raise ConfigurationError("columns", f"{path}: unexpected header {header}")
        rows = [(r[0], float(r[1]), float(r[2]), float(r[3]), int(r[4])) for r in reader]
    records = {}
    for label, *point in rows:
        records.setdefault(label, []).append(tuple(point))
    return [CurveRecord(label, pts) for label, pts in records.items()]


# -- configuration ------------------------------------------------------------


def _snr_grid(job, value):
    if isinstance(value, dict):
        try:
            start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise JobError(job, "snr_db", f"range needs start, stop and step (missing {exc})") from None
        if step <= 0:
            raise JobError(job, "snr_db", "step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(count)]
    if isinstance(value, (int, float)):
        value = [value]
    if not isinstance(value, (list, tuple)) or not value:
        raise JobError(job, "snr_db", "must be a non-empty list or a {start, stop, step} range")
    grid = [float(v) for v in value]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise JobError(job, "snr_db", "must be strictly increasing")
    return grid


def _get(job, spec, key, kind, default=None, required=False):
    if key not in spec:
        if required:
            raise JobError(job, key, f"missing required field {key!r}")
        return default
    value = spec[key]
    try:
        if kind is int:
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise JobError(job, key, f"invalid value {value!r} for {key!r}") from None


_COMMON = {"name", "type", "seed"}
_FIELDS = {
    "simulate": {"scheme", "n_rx", "n_ris", "snr_db", "lambda_mode", "min_bit_errors", "max_symbols",
                 "block_size", "noiseless"},
    "analyze": {"quantity", "method", "n_rx", "n_ris", "snr_db", "es"},
    "moments": {"samples", "cases"},
    "lambda_hist": {"n_rx", "n_ris", "realizations", "bins"},
}


@dataclass
class Job:
    name: str
    kind: str
    seed: int
    params: dict


def parse_job(spec, default_seed):
    if not isinstance(spec, dict):
        raise ConfigurationError("jobs", f"each job must be a mapping, got {type(spec).__name__}")
    name = spec.get("name")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise ConfigurationError("name", f"every job needs a plain-text name, got {name!r}")
    kind = spec.get("type")
    if kind not in JOB_TYPES:
        raise JobError(name, "type", f"type must be one of {JOB_TYPES}, got {kind!r}")
    unknown = set(spec) - _COMMON - _FIELDS[kind]
    if unknown:
        raise JobError(name, sorted(unknown)[0], f"unknown field(s) {sorted(unknown)}")
    seed = _get(name, spec, "seed", int, default_seed)
    if seed < 0 or seed >= 1 << 64:
        raise JobError(name, "seed", "must be a 64-bit non-negative integer")

    p = {}
    try:
        if kind == "simulate":
            p["config"] = SimConfig(
                scheme=_get(name, spec, "scheme", Scheme, Scheme.RQSSK),
                n_rx=_get(name, spec, "n_rx", int, required=True),
                n_ris=_get(name, spec, "n_ris", int, required=True),
                snr_grid_db=_snr_grid(name, spec.get("snr_db")),
                lambda_mode=_get(name, spec, "lambda_mode", LambdaMode, LambdaMode.EXACT),
                min_bit_errors=_get(name, spec, "min_bit_errors", int, 200),
                max_symbols=_get(name, spec, "max_symbols", int, 10_000_000),
                master_seed=seed,
                block_size=_get(name, spec, "block_size", int, DEFAULT_BLOCK),
                noiseless=_get(name, spec, "noiseless", bool, False),
            )
        elif kind == "analyze":
            p["quantity"] = _get(name, spec, "quantity", str, "abep_with_polarity")
            if p["quantity"] not in QUANTITIES:
                raise JobError(name, "quantity", f"must be one of {QUANTITIES}")
            p["method"] = _get(name, spec, "method", Method, Method.GIL_PELAEZ)
            p["n_rx"] = _get(name, spec, "n_rx", int, required=True)
            p["n_ris"] = _get(name, spec, "n_ris", int, required=True)
            p["es"] = _get(name, spec, "es", float, 1.0)
            p["snr_db"] = _snr_grid(name, spec.get("snr_db"))
            # surface dimension errors now rather than mid-run
            SimConfig(Scheme.RQSSK, p["n_rx"], p["n_ris"], p["snr_db"])
        elif kind == "moments":
            p["samples"] = _get(name, spec, "samples", int, 1_000_000)
            cases = spec.get("cases", [c.value for c in Case])
            p["cases"] = [Case(c) for c in cases]
        else:
            p["n_rx"] = _get(name, spec, "n_rx", int, 4)
            p["n_ris"] = _get(name, spec, "n_ris", int, 256)
            p["realizations"] = _get(name, spec, "realizations", int, 10_000)
            p["bins"] = _get(name, spec, "bins", int, 50)
            if p["realizations"] < 2 or p["bins"] < 1:
                raise JobError(name, "realizations", "need realizations >= 2 and bins >= 1")
            SimConfig(Scheme.RQSSK, p["n_rx"], p["n_ris"], [0.0])
    except JobError:
        raise
    except ConfigurationError as exc:
        raise JobError(name, exc.param, str(exc)) from None
    except ValueError as exc:
        raise JobError(name, "value", str(exc)) from None
    return Job(name, kind, seed, p)


@dataclass
class CampaignConfig:
    jobs: list
    output_dir: Path
    format: str = "csv"
    seed: int = 0
    workers: int = 1


def parse_campaign(data, overrides=None):
    """Validate a campaign mapping; ``overrides`` replaces top-level keys."""
    if not isinstance(data, dict):
        raise ConfigurationError("campaign", "top level must be a mapping")
    data = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    fmt = data.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigurationError("format", f"must be one of {FORMATS}, got {fmt!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("seed", "must be a non-negative integer")
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("workers", "must be a positive integer")
    specs = data.get("jobs")
    if not isinstance(specs, list) or not specs:
        raise ConfigurationError("jobs", "must be a non-empty list")
    jobs = [parse_job(s, seed) for s in specs]
    names = [j.name for j in jobs]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ConfigurationError("name", f"job names must be unique, repeated: {dup}")
    out = data.get("output_dir", "results")
    return CampaignConfig(jobs, Path(out), fmt, seed, workers)


def load_campaign(path, overrides=None):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError("config_path", f"cannot read {path}: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError("config_path", f"{path} is not valid YAML: {exc}") from None
    return parse_campaign(data, overrides)


# -- execution ----------------------------------------------------------------


def _run_simulate(job, workers):
    cfg = job.params["config"]
    results = run_ber(cfg, workers=workers)
    points = [(r.snr_db, r.ber, r.std_error, r.symbols) for r in results]
    return [CurveRecord(job.name, points)]


def _run_analyze(job, workers):
    p = job.params
    fn = {
        "abep_with_polarity": abep_with_polarity,
        "abep_no_polarity": abep_no_polarity,
        "pep": pep_ssk_mixture,
    }[p["quantity"]]
    points = []
    for snr_db in p["snr_db"]:
        n0 = p["es"] / 10.0 ** (snr_db / 10.0)
        points.append((snr_db, fn(p["n_rx"], p["n_ris"], p["es"], n0, p["method"]), 0.0, 0))
    return [CurveRecord(job.name, points)]


MOMENT_COLUMNS = ("case", "quantity", "estimate", "std_error", "closed_form", "z_score", "samples")


def _run_moments(job, workers):
    rows = []
    for k, case in enumerate(job.params["cases"]):
        stream = RngStream(job.seed, k, path=(DOMAIN_MOMENTS,))
        _, reports = empirical_moments(case, job.params["samples"], stream)
        for qty, rep in reports.items():
            rows.append((case.value, qty, rep.estimate, rep.std_error, rep.closed_form, rep.z_score,
                         job.params["samples"]))
    return rows


HIST_COLUMNS = ("quantity", "bin_lo", "bin_hi", "value")


def _run_lambda_hist(job, workers):
    p = job.params
    lam, code = lambda_samples(p["n_rx"], p["n_ris"], p["realizations"], job.seed)
    counts, edges = np.histogram(lam, bins=p["bins"], range=(0.0, 1.0))
    nan = math.nan
    rows = [
        ("realizations", nan, nan, len(lam)),
        ("mean", nan, nan, float(np.mean(lam))),
        ("variance", nan, nan, float(np.var(lam, ddof=1))),
        ("boundary_at_zero", nan, nan, int(np.sum(code == 1))),
        ("boundary_at_one", nan, nan, int(np.sum(code == 2))),
    ]
    rows += [("count", float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    return rows


def job_text(job, fmt, workers=1):
    """Run one job and return the result file's text."""
    if job.kind == "simulate":
        return _table_text(_curve_rows(_run_simulate(job, workers)), CURVE_COLUMNS, fmt)
    if job.kind == "analyze":
        return _table_text(_curve_rows(_run_analyze(job, workers)), CURVE_COLUMNS, fmt)
    if job.kind == "moments":
        return _table_text(_run_moments(job, workers), MOMENT_COLUMNS, fmt)
    return _table_text(_run_lambda_hist(job, workers), HIST_COLUMNS, fmt)


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_jobs(campaign, config_path=None, log=None):
    """Run every job, write results and the manifest; returns the exit status.

    A failing job is reported and skipped; the status is 1 if any job
    failed or if a previous manifest recorded different hashes for the
    same seeds, else 0.
    """
    log = log or (lambda msg: print(msg, file=sys.stderr))
    out = Path(campaign.output_dir)
    manifest_path = out / "manifest.json"
    previous = {}
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text(encoding="utf-8"))
            previous = {(j["name"], j["seed"]): j.get("sha256") for j in old.get("jobs", [])}
        except (OSError, ValueError, KeyError, TypeError):
            previous = {}

    entries, status = [], 0
    for job in campaign.jobs:
        entry = {"name": job.name, "type": job.kind, "seed": job.seed}
        t0 = time.perf_counter()
        try:
            text = job_text(job, campaign.format, campaign.workers)
            path = _write(out / f"{job.name}.{campaign.format}", text)
            entry.update(file=path.name, sha256=sha256_file(path), status="ok")
            old = previous.get((job.name, job.seed))
            if old is not None:
                entry["matches_previous"] = old == entry["sha256"]
                if old != entry["sha256"]:
                    status = 1
                    log(f"job {job.name!r}: result differs from the previous run with the same seed")
        except Exception as exc:  # keep going with the other jobs
            status = 1
            entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            log(f"job {job.name!r} failed: {exc}")
        entry["wall_time_s"] = round(time.perf_counter() - t0, 3)
        entries.append(entry)

    manifest = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "created_unix": round(time.time(), 3),
        "campaign_seed": campaign.seed,
        "workers": campaign.workers,
        "format": campaign.format,
        "jobs": entries,
    }
    if config_path is not None:
        manifest["config"] = {"path": str(config_path), "sha256": sha256_file(config_path)}
    _write(manifest_path, json.dumps(manifest, indent=2) + "\n")
    return status


def run_campaign(config_path, overrides=None, log=None):
    """Load, validate and run a campaign file; returns the exit status."""
    log = log or (lambda msg: print(msg, file=sys.stderr))
    try:
        campaign = load_campaign(config_path, overrides)
    except ConfigurationError as exc:
        log(f"invalid campaign: {exc}")
        return 2
    return run_jobs(campaign, config_path, log)
