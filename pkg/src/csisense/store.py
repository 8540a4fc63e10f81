"""Flat-file dataset store.

Layout under the dataset root::

    manifest.csv      id,file,subject,label,session,attributes
    traces/<id>.trace portable text traces
    features.csv      feature cache: hash comment, then id + layout header, then rows
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence
from urllib.parse import quote, unquote

import numpy as np

from .classify import LabeledDataset
from .core import Trace, TraceMeta
from .ingest import read_trace, write_trace

MANIFEST = "manifest.csv"
FEATURES = "features.csv"
MANIFEST_FIELDS = ["id", "file", "subject", "label", "session", "attributes"]


class StoreError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    id: str
    file: str
    subject: str
    label: str
    session: str
    attributes: Dict[str, str]


def encode_attributes(attrs: Dict[str, str]) -> str:
    return ";".join(f"{quote(str(k), safe='')}={quote(str(v), safe='')}" for k, v in sorted(attrs.items()))


def decode_attributes(text: str) -> Dict[str, str]:
    out = {}
    for item in filter(None, text.split(";")):
        k, sep, v = item.partition("=")
        if not sep:
            raise StoreError(f"bad attribute entry {item!r}")
        out[unquote(k)] = unquote(v)
    return out


def trace_id(trace: Trace, index: int) -> str:
    m = trace.meta
    if m.subject_id and m.session:
        return f"{m.subject_id}-{m.session}"
    return f"trace-{index:05d}"


def _manifest_text(rows: Sequence[ManifestRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_FIELDS)
    for r in rows:
        w.writerow([r.id, r.file, r.subject, r.label, r.session, encode_attributes(r.attributes)])
    return buf.getvalue()


def write_dataset(root, traces: Sequence[Trace], decimals: Optional[int] = 6) -> List[ManifestRow]:
    root = Path(root)
    (root / "traces").mkdir(parents=True, exist_ok=True)
    rows, seen = [], set()
    for i, tr in enumerate(traces):
        tid = trace_id(tr, i)
        if tid in seen:
            raise StoreError(f"duplicate trace id {tid}")
        seen.add(tid)
        rel = f"traces/{tid}.trace"
        write_trace(tr, root / rel, decimals)
        m = tr.meta
        rows.append(ManifestRow(tid, rel, m.subject_id, m.label, m.session, dict(m.attributes)))
    (root / MANIFEST).write_text(_manifest_text(rows))
    # a fresh dataset invalidates whatever cache was there
    (root / FEATURES).unlink(missing_ok=True)
    return rows


def read_manifest(root) -> List[ManifestRow]:
    root = Path(root)
    path = root / MANIFEST
    if not path.is_file():
        raise StoreError(f"no manifest at {path}")
    reader = csv.reader(io.StringIO(path.read_text()))
    header = next(reader, None)
    if header != MANIFEST_FIELDS:
        raise StoreError(f"corrupt manifest {path}: header {header!r}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(MANIFEST_FIELDS):
            raise StoreError(f"corrupt manifest {path}: line {lineno} has {len(rec)} fields")
        tid, rel, subject, label, session, attrs = rec
        if not (root / rel).is_file():
            raise StoreError(f"manifest line {lineno} references missing file {rel}")
        rows.append(ManifestRow(tid, rel, subject, label, session, decode_attributes(attrs)))
    return rows


def load_traces(root) -> List[Trace]:
    """Read every manifest trace; manifest metadata wins over the file header."""
    root = Path(root)
    out = []
    for row in read_manifest(root):
        tr = read_trace(root / row.file)
        meta = TraceMeta(row.subject, row.label, row.session, row.attributes)
        out.append(Trace(tr.timestamps, tr.csi, tr.nominal_rate, meta, dims=tr.dims))
    return out


def write_feature_cache(root, config_hash: str, dataset: LabeledDataset) -> None:
    lines = [f"# csisense-features hash={config_hash}", ",".join(["id", *dataset.layout])]
    for tid, row in zip(dataset.ids, dataset.X.tolist()):
        lines.append(",".join([tid, *map(repr, row)]))
    Path(root, FEATURES).write_text("\n".join(lines) + "\n")


def read_feature_cache(root, config_hash: str) -> Optional[LabeledDataset]:
    """Cached features joined with the manifest, or ``None`` when missing or stale."""
    path = Path(root, FEATURES)
    if not path.is_file():
        return None
    lines = path.read_text().splitlines()
    if len(lines) < 2 or lines[0] != f"# csisense-features hash={config_hash}":
        return None
    manifest = {r.id: r for r in read_manifest(root)}
    layout = lines[1].split(",")[1:]
    ids, X = [], []
    for line in lines[2:]:
        tid, *vals = line.split(",")
        if tid not in manifest or len(vals) != len(layout):
            return None
        ids.append(tid)
        X.append([float(v) for v in vals])
    if sorted(ids) != sorted(manifest):
        return None
    rows = [manifest[t] for t in ids]
    return LabeledDataset(np.array(X).reshape(len(ids), len(layout)), [r.label for r in rows],
                          [r.subject for r in rows], [r.attributes for r in rows], layout, ids)
