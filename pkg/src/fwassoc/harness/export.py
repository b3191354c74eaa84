"""CSV/JSON persistence of episode results and summaries.

Files written to the output directory:

* ``slots_<policy>.csv`` with columns ``run, slot, user, bs,
  service_rate_bps, handover_flag, hit_ms`` (floats as ``%.17g``);
* ``solver_timing.csv`` with ``policy, run, slot, iterations,
  wall_time_s, converged``;
* ``summary.json`` (``schema_version`` plus one summary per policy), valid
  against ``schemas/summary.schema.json``.
"""
import csv
import json
import os
from importlib import resources

import numpy as np

from .montecarlo import RunSummary

SCHEMA_VERSION = 1
SLOT_COLUMNS = ("run", "slot", "user", "bs", "service_rate_bps", "handover_flag", "hit_ms")
TIMING_COLUMNS = ("policy", "run", "slot", "iterations", "wall_time_s", "converged")


def _fmt(v):
    return "%.17g" % v


def _open(path, mode):
    try:
        return open(path, mode, newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc}") from exc


def write_slots_csv(episodes, path):
    """One row per (run, slot, user); ``episodes`` is a run-ordered list."""
    with _open(path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(SLOT_COLUMNS)
        for run, ep in enumerate(episodes):
            T, U = ep.service_rate.shape
            for t in range(T):
                rate, bs, ho, hit = ep.service_rate[t], ep.assoc[t], ep.handover[t], ep.hit_ms[t]
                w.writerows(
                    (run, t, u, int(bs[u]), _fmt(rate[u]), int(ho[u]), _fmt(hit[u])) for u in range(U)
                )
    return path


def read_slots_csv(path):
    """Columns of a slot CSV as numpy arrays keyed by column name."""
    with _open(path, "r") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = list(r)
    if tuple(header) != SLOT_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header}")
    cols = list(zip(*rows)) if rows else [()] * len(header)
    out = {}
    for name, col in zip(header, cols):
        dtype = np.float64 if name in ("service_rate_bps", "hit_ms") else np.int64
        out[name] = np.array(col, dtype=dtype)
    return out


def write_timing_csv(episodes_by_policy, path):
    with _open(path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for name, episodes in episodes_by_policy.items():
            for run, ep in enumerate(episodes):
                for t in range(len(ep.wall_time)):
                    w.writerow((name, run, t, int(ep.iterations[t]), _fmt(ep.wall_time[t]), int(ep.converged[t])))
    return path


def summary_document(summaries, base_seed=None, config=None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "base_seed": base_seed,
        "policies": {name: s.to_dict() for name, s in summaries.items()},
    }
    if config is not None:
        doc["config"] = config
    return doc


def write_summary_json(summaries, path, base_seed=None, config=None):
    doc = summary_document(summaries, base_seed, config)
    with _open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return path


def read_summary_json(path):
    """Summaries keyed by policy from a ``summary.json``."""
    with _open(path, "r") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    return {name: RunSummary.from_dict(d) for name, d in doc["policies"].items()}


def load_schema():
    return json.loads(resources.files("fwassoc").joinpath("schemas/summary.schema.json").read_text())


def export_results(episodes_by_policy, summaries, path, base_seed=None, config=None):
    """Write slot CSVs, the timing CSV and the summary JSON under ``path``."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    files = {}
    for name, episodes in episodes_by_policy.items():
        files[f"slots_{name}"] = write_slots_csv(episodes, os.path.join(path, f"slots_{name}.csv"))
    files["timing"] = write_timing_csv(episodes_by_policy, os.path.join(path, "solver_timing.csv"))
    files["summary"] = write_summary_json(summaries, os.path.join(path, "summary.json"), base_seed, config)
    return files
