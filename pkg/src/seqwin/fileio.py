"""On-disk formats: descriptor files, CSVs, reports.

A descriptor file is a pair ``<stem>.json`` (manifest) + ``<stem>.bin``
(little-endian float32 blob of count * dim values, row-major). The same
envelope carries cached difference matrices. All CSVs are UTF-8 with LF
newlines and numeric fields printed with 9 significant digits so repeated
runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .descriptors import Descriptor, FormatError, WifiRecord


def fmt(x) -> str:
    """Canonical numeric formatting for CSV output (9 significant digits)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def _stem(path) -> Path:
    p = Path(path)
    if p.suffix in (".json", ".bin"):
        return p.with_suffix("")
    return p


# --------------------------------------------------------------------------
# Manifest + blob envelope

def _write_envelope(stem: Path, manifest: dict, values: np.ndarray) -> None:
    flat = np.ascontiguousarray(values, dtype="<f4")
    stem.parent.mkdir(parents=True, exist_ok=True)
    with open(stem.with_suffix(".bin"), "wb") as fh:
        fh.write(flat.tobytes())
    with open(stem.with_suffix(".json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True)
        fh.write("\n")


def _read_envelope(stem: Path) -> tuple[dict, np.ndarray]:
    man_path = stem.with_suffix(".json")
    bin_path = stem.with_suffix(".bin")
    if not man_path.exists():
        raise FormatError(f"missing manifest {man_path}")
    if not bin_path.exists():
        raise FormatError(f"missing blob {bin_path}")
    try:
        manifest = json.loads(man_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{man_path}: invalid JSON manifest: {exc}") from exc
    for key in ("count", "dim", "dtype", "layout"):
        if key not in manifest:
            raise FormatError(f"{man_path}: manifest missing key {key!r}")
    if manifest["dtype"] != "f32":
        raise FormatError(f"{man_path}: unsupported dtype {manifest['dtype']!r}")
    if manifest["layout"] != "row-major":
        raise FormatError(f"{man_path}: unsupported layout {manifest['layout']!r}")
    count, dim = int(manifest["count"]), int(manifest["dim"])
    blob = bin_path.read_bytes()
    expected = count * dim * 4
    if len(blob) != expected:
        raise FormatError(
            f"{bin_path}: blob holds {len(blob)} bytes, manifest implies {expected}"
        )
    values = np.frombuffer(blob, dtype="<f4").reshape(count, dim)
    return manifest, values


def save_descriptors(path, descriptors, extra: dict | None = None) -> Path:
    """Write a traverse as manifest + float32 blob. Returns the stem path."""
    descriptors = list(descriptors)
    if not descriptors:
        raise ValueError("cannot save an empty traverse")
    stem = _stem(path)
    dim = descriptors[0].dim
    kind = descriptors[0].kind
    mat = np.empty((len(descriptors), dim), dtype=np.float64)
    for i, d in enumerate(descriptors):
        if d.dim != dim:
            raise ValueError(f"descriptor dims differ: {d.dim} vs {dim}")
        mat[i] = d.as_dense()
    manifest = {
        "count": len(descriptors),
        "dim": dim,
        "dtype": "f32",
        "layout": "row-major",
        "kind": kind,
    }
    if extra:
        manifest.update(extra)
    _write_envelope(stem, manifest, mat)
    return stem


def load_descriptors(path) -> list[Descriptor]:
    """Load a traverse saved by save_descriptors (or any conforming file)."""
    manifest, values = _read_envelope(_stem(path))
    kind = manifest.get("kind", "dense")
    out: list[Descriptor] = []
    if kind == "sparse":
        dim = int(manifest["dim"])
        for row in values:
            nz = np.nonzero(row)[0]
            out.append(Descriptor.sparse({int(k): float(row[k]) for k in nz}, dim))
    else:
        for row in values:
            out.append(Descriptor.dense(row.astype(np.float64)))
    return out


# --------------------------------------------------------------------------
# Wi-Fi observation CSV: frame_index,ap_id,rssi

def read_wifi_csv(path) -> list[WifiRecord]:
    records: list[WifiRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty Wi-Fi CSV") from None
        if [h.strip() for h in header] != ["frame_index", "ap_id", "rssi"]:
            raise FormatError(
                f"{path}: expected header frame_index,ap_id,rssi, got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                frame = int(row[0])
                ap = int(row[1])
                rssi = float(row[2])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if frame < 0 or ap < 0:
                raise FormatError(f"{path}:{lineno}: negative frame or ap id")
            if not math.isfinite(rssi):
                raise FormatError(f"{path}:{lineno}: rssi must be finite")
            records.append(WifiRecord(frame, ap, rssi))
    return records


def write_wifi_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("frame_index,ap_id,rssi\n")
        for rec in records:
            fh.write(f"{rec.frame_index},{rec.ap_id},{fmt(rec.rssi)}\n")


# --------------------------------------------------------------------------
# Ground truth CSV: query_index,ref_index (absent rows = no ground truth)

def read_ground_truth_csv(path) -> dict[int, int]:
    mapping: dict[int, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty ground truth CSV") from None
        if [h.strip() for h in header] != ["query_index", "ref_index"]:
            raise FormatError(f"{path}: expected header query_index,ref_index")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                q, r = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise FormatError(f"{path}:{lineno}: expected two integers") from None
            mapping[q] = r
    return mapping


def write_ground_truth_csv(path, mapping: dict[int, int]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_index,ref_index\n")
        for q in sorted(mapping):
            fh.write(f"{q},{mapping[q]}\n")


# --------------------------------------------------------------------------
# Localization result CSVs

def write_matches_csv(path, results) -> None:
    """Fixed-mode output: query_index,best_ref,window_len,score,significance,status"""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_index,best_ref,window_len,score,significance,status\n")
        for r in results:
            fh.write(
                f"{r.query_index},{r.best_ref},{r.window_len},"
                f"{fmt(r.score)},{fmt(r.significance)},{r.status}\n"
            )


def write_trace_csv(path, results) -> None:
    """Adaptive-mode output: query_index,chosen_L,best_ref,score,significance,status"""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_index,chosen_L,best_ref,score,significance,status\n")
        for r in results:
            fh.write(
                f"{r.query_index},{r.window_len},{r.best_ref},"
                f"{fmt(r.score)},{fmt(r.significance)},{r.status}\n"
            )


def write_pcurve_csv(path, curves_by_frame, flag_minimum: bool = False) -> None:
    """Per-frame p(L) curves: query_index,L,p (optionally with an is_min flag)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if flag_minimum:
            fh.write("query_index,L,p,is_min\n")
        else:
            fh.write("query_index,L,p\n")
        for qi, curve in curves_by_frame:
            if not curve:
                continue
            if flag_minimum:
                best = min(range(len(curve)), key=lambda k: (curve[k][1], curve[k][0]))
                for k, (L, p) in enumerate(curve):
                    fh.write(f"{qi},{L},{fmt(p)},{1 if k == best else 0}\n")
            else:
                for L, p in curve:
                    fh.write(f"{qi},{L},{fmt(p)}\n")


# --------------------------------------------------------------------------
# Evaluation outputs

def write_pr_csv(path, points) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("threshold,precision,recall,n_accepted,n_correct\n")
        for p in points:
            fh.write(
                f"{fmt(p.threshold)},{fmt(p.precision)},{fmt(p.recall)},"
                f"{p.n_accepted},{p.n_correct}\n"
            )


def write_report_json(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def config_digest(config: dict) -> str:
    """Stable hex digest of a config mapping (for report provenance)."""
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------
# Shuffle manifest CSV: new_index,old_index

def write_shuffle_manifest(path, permutation) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("new_index,old_index\n")
        for new_i, old_i in enumerate(permutation):
            fh.write(f"{new_i},{int(old_i)}\n")


def read_shuffle_manifest(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty shuffle manifest") from None
        if [h.strip() for h in header] != ["new_index", "old_index"]:
            raise FormatError(f"{path}: expected header new_index,old_index")
        pairs = []
        for row in reader:
            if not row:
                continue
            pairs.append((int(row[0]), int(row[1])))
    pairs.sort()
    perm = np.array([old for _, old in pairs], dtype=np.int64)
    if sorted(perm.tolist()) != list(range(len(perm))):
        raise FormatError(f"{path}: manifest is not a permutation")
    return perm
