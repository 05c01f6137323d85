"""Run reports and their CSV / JSON renderings."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..adversarial import EpsilonRow, SnrAttackRow
from ..errors import ModrecError
from ..evaluation import ConfusionMatrix, CrossEvalRow, SnrRow, SweepResult
from ..nn.training import LossTrace

CONFUSION_CSV = "confusion.csv"
PER_SNR_CSV = "per_snr.csv"
LOSS_CSV = "loss_trace.csv"
EPSILON_CSV = "epsilon_sweep.csv"
SNR_ATTACK_CSV = "snr_adversarial.csv"
SWEEP_CSV = "sweep.csv"
CROSS_EVAL_CSV = "cross_eval.csv"
REPORT_JSON = "report.json"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunReport",
    "type": "object",
    "required": ["run_id", "hyperparams", "dataset_tags", "clean_accuracy", "confusion", "per_snr"],
    "additionalProperties": False,
    "properties": {
        "run_id": {"type": "string", "minLength": 1},
        "hyperparams": {"type": "object"},
        "dataset_tags": {"type": "array", "items": {"type": "string"}},
        "clean_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "confusion": {
            "type": "object",
            "required": ["labels", "counts"],
            "properties": {
                "labels": {"type": "array", "items": {"type": "string"}},
                "counts": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
            },
        },
        "per_snr": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["snr_db", "count", "correct"],
                "properties": {
                    "snr_db": {"type": "number"},
                    "count": {"type": "integer", "minimum": 1},
                    "correct": {"type": "integer", "minimum": 0},
                },
            },
        },
        "loss_trace": {"type": ["string", "null"]},
        "epsilon_sweep": {
            "type": ["array", "null"],
            "items": {
                "type": "object",
                "required": ["epsilon", "accuracy", "count"],
                "properties": {
                    "epsilon": {"type": "number", "minimum": 0},
                    "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
                    "count": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}


class IncompleteReportError(ModrecError, ValueError):
    pass


@dataclass
class RunReport:
    run_id: str
    hyperparams: dict | None = None
    dataset_tags: list[str] | None = None
    clean_accuracy: float | None = None
    confusion: ConfusionMatrix | None = None
    per_snr: list[SnrRow] | None = None
    loss_trace: str | None = None  # path of the loss-trace CSV
    epsilon_sweep: list[EpsilonRow] | None = None

    REQUIRED = ("run_id", "hyperparams", "dataset_tags", "clean_accuracy", "confusion", "per_snr")

    def missing(self) -> list[str]:
        return [k for k in self.REQUIRED if getattr(self, k) in (None, "")]

    def check_complete(self) -> None:
        missing = self.missing()
        if missing:
            raise IncompleteReportError(f"report is missing: {', '.join(missing)}")

    def to_dict(self) -> dict:
        self.check_complete()
        return {
            "run_id": self.run_id,
            "hyperparams": self.hyperparams,
            "dataset_tags": list(self.dataset_tags),
            "clean_accuracy": self.clean_accuracy,
            "confusion": self.confusion.to_dict(),
            "per_snr": [{"snr_db": r.snr_db, "count": r.count, "correct": r.correct} for r in self.per_snr],
            "loss_trace": self.loss_trace,
            "epsilon_sweep": None if self.epsilon_sweep is None else [
                {"epsilon": r.epsilon, "accuracy": r.accuracy, "count": r.count} for r in self.epsilon_sweep
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        eps = d.get("epsilon_sweep")
        return cls(
            run_id=d["run_id"],
            hyperparams=d["hyperparams"],
            dataset_tags=list(d["dataset_tags"]),
            clean_accuracy=d["clean_accuracy"],
            confusion=ConfusionMatrix.from_dict(d["confusion"]),
            per_snr=[SnrRow(float(r["snr_db"]), int(r["count"]), int(r["correct"])) for r in d["per_snr"]],
            loss_trace=d.get("loss_trace"),
            epsilon_sweep=None if eps is None else [EpsilonRow(float(r["epsilon"]), float(r["accuracy"]),
                                                               int(r["count"])) for r in eps],
        )

    def __eq__(self, other):
        if not isinstance(other, RunReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def report_to_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def report_from_json(text: str) -> RunReport:
    return RunReport.from_dict(json.loads(text))


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return Path(path)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_confusion_csv(cm: ConfusionMatrix, path):
    rows = [[label, *map(str, row)] for label, row in zip(cm.labels, cm.counts)]
    return _write_rows(path, ["true\\pred", *cm.labels], rows)


def read_confusion_csv(path) -> ConfusionMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = tuple(rows[0][1:])
    counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64)
    return ConfusionMatrix(counts, labels)


def write_snr_csv(rows: list[SnrRow], path):
    return _write_rows(path, ["snr_db", "count", "correct", "accuracy"],
                       [[_fmt(r.snr_db), r.count, r.correct, _fmt(r.accuracy)] for r in rows])


def write_loss_csv(trace: LossTrace, path):
    val = dict(trace.val)
    rows = [[i, _fmt(v), _fmt(val[i]) if i in val else ""] for i, v in enumerate(trace.train)]
    return _write_rows(path, ["batch", "train_loss", "val_loss"], rows)


def write_epsilon_csv(rows: list[EpsilonRow], path):
    return _write_rows(path, ["epsilon", "accuracy", "count"], [[_fmt(r.epsilon), _fmt(r.accuracy), r.count] for r in rows])


def write_snr_attack_csv(rows: list[SnrAttackRow], path):
    return _write_rows(path, ["snr_db", "count", "clean_accuracy", "adversarial_accuracy"],
                       [[_fmt(r.snr_db), r.count, _fmt(r.clean_accuracy), _fmt(r.adversarial_accuracy)] for r in rows])


def write_sweep_csv(result: SweepResult, path):
    header = ["run", "conv1_filters", "conv2_filters", "dense_units", "learning_rate", "l2_coefficient",
              "param_count", "train_accuracy", "val_accuracy", "selected"]
    rows = [[r.index, r.hyper.conv1_filters, r.hyper.conv2_filters, r.hyper.dense_units, _fmt(r.hyper.learning_rate),
             _fmt(r.hyper.l2_coefficient), r.param_count, _fmt(r.train_accuracy), _fmt(r.val_accuracy),
             int(r.index == result.best.index)] for r in result.runs]
    return _write_rows(path, header, rows)


def write_cross_eval_csv(rows: list[CrossEvalRow], path):
    return _write_rows(path, ["train", "test", "accuracy", "count", "train_accuracy"],
                       [[r.train_tag, r.test_tag, _fmt(r.accuracy), r.count, _fmt(r.train_accuracy)] for r in rows])


def read_csv_columns(path) -> dict[str, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(header)}


def export_report(report: RunReport, outdir, formats=("csv", "json")) -> list[Path]:
    """Write the report in the requested formats; SVGs are rendered from the CSVs."""
    report.check_complete()
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats or "svg" in formats:
        written.append(write_confusion_csv(report.confusion, out / CONFUSION_CSV))
        written.append(write_snr_csv(report.per_snr, out / PER_SNR_CSV))
        if report.epsilon_sweep is not None:
            written.append(write_epsilon_csv(report.epsilon_sweep, out / EPSILON_CSV))
    if "json" in formats:
        path = out / REPORT_JSON
        path.write_text(report_to_json(report) + "\n", encoding="utf-8")
        written.append(path)
    if "svg" in formats:
        from .plots import render_directory

        written.extend(render_directory(out))
    return written


def write_json(obj, path) -> Path:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return Path(path)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, os.PathLike):
        return os.fspath(o)
    raise TypeError(f"{type(o).__name__} is not JSON serializable")
