"""End-to-end glue: traces -> preprocessing -> features -> evaluation reports."""
from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .classify import LabeledDataset
from .config import PipelineConfig
from .core import Trace
from .evaluation import EvalReport, grouped_eval, run_protocol
from .features import extract_trace_features
from .preprocess import preprocess_trace
from .sim import generate_gesture_dataset
from . import store

log = logging.getLogger(__name__)

REPORT_TXT = "report.txt"
REPORT_CSV = "report.csv"
REPORT_FIELDS = ["protocol", "classifier", "group", "true", "predicted", "count", "percent"]


def featurize(traces: Sequence[Trace], config: PipelineConfig, ids: Optional[Sequence[str]] = None) -> LabeledDataset:
    spec = config.filter_spec
    rows, layout = [], None
    for tr in traces:
        fv = extract_trace_features(preprocess_trace(tr, spec), config.feature_mode, config.n_bins)
        if layout is None:
            layout = fv.layout
        elif fv.layout != layout:
            raise ValueError("traces produce different feature layouts; mixed dimensions in dataset")
        rows.append(fv.values)
    if not rows:
        raise ValueError("no traces to featurize")
    ids = list(ids) if ids is not None else [store.trace_id(t, i) for i, t in enumerate(traces)]
    return LabeledDataset(np.stack(rows), [t.meta.label for t in traces], [t.meta.subject_id for t in traces],
                          [dict(t.meta.attributes) for t in traces], layout, ids)


def simulate(config: PipelineConfig) -> List[Trace]:
    return generate_gesture_dataset(config.sim_config, config.gesture_spec)


def store_features(root, config: PipelineConfig) -> LabeledDataset:
    """Return cached features for a stored dataset, recomputing them if stale."""
    h = config.feature_hash()
    cached = store.read_feature_cache(root, h)
    if cached is not None:
        return cached
    rows = store.read_manifest(root)
    traces = store.load_traces(root)
    dataset = featurize(traces, config, [r.id for r in rows])
    store.write_feature_cache(root, h, dataset)
    return dataset


def evaluate(dataset: LabeledDataset, config: PipelineConfig) -> List[EvalReport]:
    spec = config.classifier_spec
    frac = config.raw["protocols"]["train_fraction"]
    group_by = config.raw["protocols"]["group_by"]
    reports = []
    for name in config.protocols:
        log.info("evaluating %s", name)
        if group_by:
            reports.append(grouped_eval(dataset, spec, group_by, name, config.seed, frac))
        else:
            reports.append(run_protocol(name, dataset, spec, config.seed, frac))
    return reports


def format_reports(reports: Sequence[EvalReport]) -> str:
    return "\n".join(r.format() for r in reports)


def reports_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerows(r.rows())
    return buf.getvalue()


def write_reports(reports: Sequence[EvalReport], out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt, tab = out / REPORT_TXT, out / REPORT_CSV
    txt.write_text(format_reports(reports))
    tab.write_text(reports_csv(reports))
    return [txt, tab]


def run_pipeline(config: PipelineConfig, out_dir=None) -> List[EvalReport]:
    """Simulate (or load) traces, featurize, evaluate every configured protocol, write reports."""
    root = config.dataset_dir
    if config.raw["source"] == "simulate":
        traces = simulate(config)
        if config.raw["simulation"]["write_traces"]:
            # featurize what was stored so the cache matches a recomputation from disk
            store.write_dataset(root, traces)
            dataset = store_features(root, config)
        else:
            dataset = featurize(traces, config)
    else:
        dataset = store_features(root, config)
    reports = evaluate(dataset, config)
    write_reports(reports, out_dir or config.output_dir)
    return reports
