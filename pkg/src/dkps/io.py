"""File formats: embedding JSONL, matrix/configuration/results CSV, JSON configs.

All reals are written with 17 significant digits so that values survive a
write/read cycle bit-for-bit.
"""

from __future__ import annotations

import contextlib
import csv
import json
import math
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Configuration, DissimilarityMatrix, ResponseBatch
from .discrepancy import CollectionTable
from .experiments import RegimeConfig, TrialResult
from .synth import CollectionSpec, GammaSchedule, LatentSpec

RESULTS_HEADER = (
    "regime", "n", "m", "r", "bootstrap", "avg_l2_err", "two_inf_err",
    "stress", "condition_ratio", "wall_time_s",
)
_RECORD_KEYS = {"model", "query", "replicate", "vector"}


class InputError(ValueError):
    """Malformed or inconsistent input file."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


def _sink(target):
    """Open `target` for writing unless it is already a text stream."""
    if hasattr(target, "write"):
        return contextlib.nullcontext(target)
    return Path(target).open("w", newline="")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, path, line) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(f"not a number: {text!r}", path, line) from None


# -- embeddings -------------------------------------------------------------

def _check_record(rec, path, line):
    if not isinstance(rec, dict) or set(rec) != _RECORD_KEYS:
        got = sorted(rec) if isinstance(rec, dict) else type(rec).__name__
        raise InputError(f"expected an object with keys {sorted(_RECORD_KEYS)}, got {got}", path, line)
    if not isinstance(rec["model"], str) or not isinstance(rec["query"], str):
        raise InputError("model and query must be strings", path, line)
    rep = rec["replicate"]
    if isinstance(rep, bool) or not isinstance(rep, int) or rep < 0:
        raise InputError(f"replicate must be a nonnegative integer, got {rep!r}", path, line)
    vec = rec["vector"]
    if not isinstance(vec, list) or not vec:
        raise InputError("vector must be a nonempty list", path, line)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in vec):
        raise InputError("vector entries must be finite numbers", path, line)


def read_embeddings(path) -> CollectionTable:
    """Assemble a complete :class:`CollectionTable` from a JSONL embedding file.

    Each line holds ``{"model", "query", "replicate", "vector"}``. Model and
    query order follow first appearance; replicates are ordered by index.
    """
    path = Path(path)
    groups: dict = {}
    models: dict = {}
    queries: dict = {}
    dim = None
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed JSON ({exc.msg})", path, lineno) from None
            _check_record(rec, path, lineno)
            vec = rec["vector"]
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise InputError(f"vector has dimension {len(vec)}, expected {dim}", path, lineno)
            key = (rec["model"], rec["query"])
            reps = groups.setdefault(key, {})
            if rec["replicate"] in reps:
                raise InputError(f"duplicate replicate {rec['replicate']} for {key}", path, lineno)
            reps[rec["replicate"]] = vec
            models.setdefault(rec["model"], None)
            queries.setdefault(rec["query"], None)
    if not groups:
        raise InputError("no embedding records", path)
    batches = {
        key: ResponseBatch(key[0], key[1], np.array([reps[k] for k in sorted(reps)], dtype=float))
        for key, reps in groups.items()
    }
    try:
        return CollectionTable(tuple(models), tuple(queries), batches)
    except ValueError as exc:
        raise InputError(str(exc), path) from None


def write_embeddings(table: CollectionTable, path) -> None:
    with _sink(path) as fh:
        for i in table.model_ids:
            for j in table.query_ids:
                for k, vec in enumerate(table.batch(i, j).vectors):
                    rec = {"model": i, "query": j, "replicate": k, "vector": [float(v) for v in vec]}
                    fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


# -- matrices and configurations -------------------------------------------

def _read_rows(path):
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InputError("empty file", path)
    return path, rows


def write_dissimilarity(mat: DissimilarityMatrix, path) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *mat.labels])
        for label, row in zip(mat.labels, mat.values):
            w.writerow([label, *map(fmt, row)])


def read_dissimilarity(path) -> DissimilarityMatrix:
    """Square CSV with a header row of labels and a leading label column."""
    path, rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    labels = header[1:]
    n = len(labels)
    if n < 1 or len(body) != n:
        raise InputError(f"expected {n} data rows for {n} labels, got {len(body)}", path)
    values = np.empty((n, n))
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != n + 1:
            raise InputError(f"expected {n + 1} fields, got {len(row)}", path, line)
        if row[0] != labels[i]:
            raise InputError(f"row label {row[0]!r} does not match column label {labels[i]!r}", path, line)
        values[i] = [_parse_float(x, path, line) for x in row[1:]]
    try:
        return DissimilarityMatrix.from_array(values, labels)
    except ValueError as exc:
        raise InputError(str(exc), path) from None


def write_configuration(config: Configuration, path) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *(f"x{k + 1}" for k in range(config.d))])
        for label, row in zip(config.labels, config.points):
            w.writerow([label, *map(fmt, row)])


def read_configuration(path) -> Configuration:
    path, rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    d = len(header) - 1
    if d < 1 or not body:
        raise InputError("configuration needs a label column, at least one coordinate, and one row", path)
    labels, points = [], []
    for i, row in enumerate(body):
        if len(row) != d + 1:
            raise InputError(f"expected {d + 1} fields, got {len(row)}", path, i + 2)
        labels.append(row[0])
        points.append([_parse_float(x, path, i + 2) for x in row[1:]])
    try:
        return Configuration(tuple(labels), np.array(points))
    except ValueError as exc:
        raise InputError(str(exc), path) from None


# -- experiment results ----------------------------------------------------

def write_results(results: Iterable[TrialResult], path) -> None:
    """Results CSV, one row per trial in the given order."""
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for res in results:
            w.writerow([
                res.regime, res.n, res.m, res.r, res.bootstrap,
                fmt(res.avg_l2_err), fmt(res.two_inf_err), fmt(res.stress),
                fmt(res.condition_ratio), fmt(res.wall_time),
            ])


def read_results(path) -> list[TrialResult]:
    path, rows = _read_rows(path)
    if tuple(rows[0]) != RESULTS_HEADER:
        raise InputError(f"unexpected header {rows[0]}", path, 1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(RESULTS_HEADER):
            raise InputError(f"expected {len(RESULTS_HEADER)} fields, got {len(row)}", path, lineno)
        try:
            out.append(TrialResult(
                row[0], int(row[1]), int(row[2]), int(row[3]), int(row[4]),
                *(float(x) for x in row[5:]),
            ))
        except ValueError:
            raise InputError("malformed results row", path, lineno) from None
    return out


# -- JSON configs ----------------------------------------------------------

def _load_json(source):
    if isinstance(source, dict):
        return dict(source), None
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object", path)
    return data, path


def _build(cls, data, path, what):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise InputError(f"unknown {what} keys: {sorted(extra)}", path)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid {what}: {exc}", path) from None


def _nested(data, path):
    data = dict(data)
    if "latent" in data:
        data["latent"] = _build(LatentSpec, data["latent"], path, "latent")
    if "gamma" in data:
        data["gamma"] = _build(GammaSchedule, data["gamma"], path, "gamma")
    return data


def load_regime_config(source, seed: int | None = None) -> RegimeConfig:
    """RegimeConfig from a JSON file or dict; `seed` overrides both the run and latent seeds."""
    data, path = _load_json(source)
    data = _nested(data, path)
    if seed is not None:
        data["seed"] = seed
        data["latent"] = LatentSpec(**{**_asdict(data.get("latent", LatentSpec())), "seed": seed})
    return _build(RegimeConfig, data, path, "experiment config")


def load_collection_spec(source, seed: int | None = None) -> tuple[CollectionSpec, int]:
    """(CollectionSpec, r) from a JSON object with n, m, r, s, latent, gamma and seed."""
    data, path = _load_json(source)
    if "r" not in data:
        raise InputError("synthetic collection config needs 'r'", path)
    r = data.pop("r")
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise InputError(f"r must be a positive integer, got {r!r}", path)
    data = _nested(data, path)
    if seed is not None:
        data["seed"] = seed
        data["latent"] = LatentSpec(**{**_asdict(data.get("latent", LatentSpec())), "seed": seed})
    return _build(CollectionSpec, data, path, "synthetic collection config"), r


def _asdict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def write_latents(latents: np.ndarray, labels: Sequence[str], path) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *(f"phi{k + 1}" for k in range(latents.shape[1]))])
        for label, row in zip(labels, latents):
            w.writerow([label, *map(fmt, row)])
