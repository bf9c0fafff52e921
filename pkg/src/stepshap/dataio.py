"""File formats: datasets, attribution records, evaluation reports.

The canonical dataset interchange format is a long CSV of cell events
(instance_id, t, feature, value, label), because clinical extracts are
event streams; a wide JSONL format (one instance per line, null marking
missing cells) is supported for convenience. Writers emit every cell so
fully-missing rows survive a round trip; readers accept sparse files and
treat absent cells as missing.

All writers are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .attribution import AttributionResult
from .core import Dataset, FeatureSchema, LabeledInstance, Window, validate_dataset
from .errors import DataFormatError
from .metrics import EvalReport

CSV_HEADER = ["instance_id", "t", "feature", "value", "label"]
FORMATS = ("csv", "jsonl")


def _float_repr(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# dataset files


def write_dataset(ds: Dataset, path: str | Path, fmt: str = "csv") -> None:
    if fmt == "csv":
        _write_dataset_csv(ds, Path(path))
    elif fmt == "jsonl":
        _write_dataset_jsonl(ds, Path(path))
    else:
        raise DataFormatError(f"unknown dataset format {fmt!r}, expected one of {FORMATS}")


def ingest(path: str | Path, fmt: str | None = None) -> Dataset:
    """Read a dataset file, deriving masks from missing cells.

    The format is taken from ``fmt`` or the file extension. Schema
    violations are reported with line numbers; the assembled dataset is
    validated before being returned.
    """
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix == ".jsonl" else "csv"
    if fmt == "csv":
        ds = _read_dataset_csv(path)
    elif fmt == "jsonl":
        ds = _read_dataset_jsonl(path)
    else:
        raise DataFormatError(f"unknown dataset format {fmt!r}, expected one of {FORMATS}")
    report = validate_dataset(ds)
    if not report.ok:
        first = report.issues[0]
        raise DataFormatError(
            f"{path}: dataset fails validation with {len(report.issues)} issue(s); "
            f"first: instance {first.instance_id}: {first.message}"
        )
    return ds


def _write_dataset_csv(ds: Dataset, path: Path) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for inst in ds.instances:
        win = inst.window
        for t in range(win.window_length):
            for j, name in enumerate(ds.schema.names):
                cell = _float_repr(win.values[t, j]) if win.mask[t, j] else ""
                writer.writerow([inst.instance_id, t, name, cell, inst.label])
    path.write_text(buffer.getvalue(), encoding="utf-8")


def _population_fill(columns: list[list[float]]) -> tuple[float, ...]:
    return tuple(float(np.median(col)) if col else 0.0 for col in columns)


def _read_dataset_csv(path: Path) -> Dataset:
    feature_order: list[str] = []
    feature_index: dict[str, int] = {}
    instance_order: list[str] = []
    cells: dict[str, dict[tuple[int, int], float | None]] = {}
    labels: dict[str, int] = {}
    last_t: dict[str, int] = {}
    max_t: dict[str, int] = {}

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}:1: empty file") from None
        if header != CSV_HEADER:
            raise DataFormatError(
                f"{path}:1: header must be {','.join(CSV_HEADER)}, got {','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}:{line_no}: expected 5 columns, got {len(row)}")
            instance_id, t_text, feature, value_text, label_text = row
            try:
                t = int(t_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{line_no}: column t: unparseable integer {t_text!r}"
                ) from None
            if t < 0:
                raise DataFormatError(f"{path}:{line_no}: column t: negative time index {t}")
            if instance_id in last_t and t < last_t[instance_id]:
                raise DataFormatError(
                    f"{path}:{line_no}: non-monotone timestamps for instance "
                    f"{instance_id}: t={t} after t={last_t[instance_id]}"
                )
            last_t[instance_id] = t
            try:
                label = int(label_text)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{line_no}: column label: unparseable integer {label_text!r}"
                ) from None
            if label not in (0, 1):
                raise DataFormatError(f"{path}:{line_no}: column label: must be 0 or 1, got {label}")
            if instance_id not in labels:
                labels[instance_id] = label
                instance_order.append(instance_id)
                cells[instance_id] = {}
                max_t[instance_id] = t
            elif labels[instance_id] != label:
                raise DataFormatError(
                    f"{path}:{line_no}: column label: instance {instance_id} already "
                    f"labelled {labels[instance_id]}"
                )
            max_t[instance_id] = max(max_t[instance_id], t)
            if feature not in feature_index:
                feature_index[feature] = len(feature_order)
                feature_order.append(feature)
            j = feature_index[feature]
            if (t, j) in cells[instance_id]:
                raise DataFormatError(
                    f"{path}:{line_no}: duplicate cell (instance {instance_id}, t={t}, "
                    f"feature {feature})"
                )
            if value_text == "":
                cells[instance_id][(t, j)] = None
            else:
                try:
                    cells[instance_id][(t, j)] = float(value_text)
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{line_no}: column value: unparseable number {value_text!r}"
                    ) from None
    if not instance_order:
        raise DataFormatError(f"{path}: no instances found")

    d = len(feature_order)
    columns: list[list[float]] = [[] for _ in range(d)]
    instances = []
    for instance_id in instance_order:
        w = max_t[instance_id] + 1
        values = np.full((w, d), np.nan)
        mask = np.zeros((w, d), dtype=bool)
        for (t, j), value in cells[instance_id].items():
            if value is not None:
                values[t, j] = value
                mask[t, j] = True
                columns[j].append(value)
        instances.append(LabeledInstance(Window(values, mask), labels[instance_id], instance_id))

    schema = FeatureSchema(tuple(feature_order), _population_fill(columns))
    max_w = max(inst.window.window_length for inst in instances)
    return Dataset(schema, tuple(instances), max_sequence_length=max_w)


def _write_dataset_jsonl(ds: Dataset, path: Path) -> None:
    lines = [json.dumps({"feature_names": list(ds.schema.names)}, sort_keys=True)]
    for inst in ds.instances:
        win = inst.window
        rows = [
            [float(v) if m else None for v, m in zip(value_row, mask_row)]
            for value_row, mask_row in zip(win.values, win.mask)
        ]
        lines.append(
            json.dumps(
                {"instance_id": inst.instance_id, "label": inst.label, "values": rows},
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_dataset_jsonl(path: Path) -> Dataset:
    names: tuple[str, ...] | None = None
    instances_raw: list[tuple[str, int, list[list[float | None]]]] = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            if "feature_names" in record:
                if names is not None:
                    raise DataFormatError(f"{path}:{line_no}: duplicate feature_names header")
                names = tuple(str(n) for n in record["feature_names"])
                continue
            for key in ("instance_id", "label", "values"):
                if key not in record:
                    raise DataFormatError(f"{path}:{line_no}: record missing key {key!r}")
            label = record["label"]
            if label not in (0, 1):
                raise DataFormatError(f"{path}:{line_no}: label must be 0 or 1, got {label!r}")
            rows = record["values"]
            if not rows or not all(isinstance(r, list) for r in rows):
                raise DataFormatError(f"{path}:{line_no}: values must be a non-empty list of rows")
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise DataFormatError(f"{path}:{line_no}: ragged value rows")
            for r in rows:
                for v in r:
                    if v is not None and not isinstance(v, (int, float)):
                        raise DataFormatError(
                            f"{path}:{line_no}: unparseable value {v!r}, expected number or null"
                        )
            instances_raw.append((str(record["instance_id"]), int(label), rows))
    if not instances_raw:
        raise DataFormatError(f"{path}: no instances found")
    d = len(instances_raw[0][2][0])
    if names is None:
        names = tuple(f"f{j}" for j in range(d))
    if len(names) != d:
        raise DataFormatError(
            f"{path}: feature_names has {len(names)} entries but records have {d} columns"
        )
    columns: list[list[float]] = [[] for _ in range(d)]
    instances = []
    for instance_id, label, rows in instances_raw:
        if len(rows[0]) != d:
            raise DataFormatError(f"{path}: instance {instance_id} has {len(rows[0])} columns, expected {d}")
        w = len(rows)
        values = np.full((w, d), np.nan)
        mask = np.zeros((w, d), dtype=bool)
        for t, row in enumerate(rows):
            for j, v in enumerate(row):
                if v is not None:
                    values[t, j] = float(v)
                    mask[t, j] = True
                    columns[j].append(float(v))
        instances.append(LabeledInstance(Window(values, mask), label, instance_id))
    schema = FeatureSchema(names, _population_fill(columns))
    max_w = max(inst.window.window_length for inst in instances)
    return Dataset(schema, tuple(instances), max_sequence_length=max_w)


# ---------------------------------------------------------------------------
# attribution records


def attribution_record(
    result: AttributionResult,
    schema: FeatureSchema,
    instance_id: str,
    method: str,
    baseline_kind: str,
    seed: int | None = None,
    n: int | None = None,
) -> dict:
    return {
        "instance_id": instance_id,
        "method": method,
        "delta": result.delta,
        "attributions": {
            name: float(result.attributions[j]) for j, name in enumerate(schema.names)
        },
        "status": result.status.value,
        "eval_count": result.model_eval_count,
        "seed": seed,
        "n": n,
        "baseline": baseline_kind,
    }


def write_attribution_records(records: Sequence[dict], path: str | Path) -> None:
    lines = [json.dumps(record, sort_keys=True) for record in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_attribution_records(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{line_no}: invalid JSON: {exc}") from None
    return records


# ---------------------------------------------------------------------------
# evaluation reports


def _nan_to_none(values) -> list:
    return [None if (isinstance(v, float) and np.isnan(v)) else float(v) for v in values]


def _direction_to_dict(direction) -> dict:
    return {
        "direction": direction.direction,
        "budgets": list(direction.budgets),
        "per_instance_area": _nan_to_none(direction.per_instance_area),
        "auc_at_k": [float(v) for v in direction.auc_at_k],
        "apr_at_k": [float(v) for v in direction.apr_at_k],
        "mean_cumulative_at_k": [float(v) for v in direction.mean_cumulative_at_k],
        "auc_area": float(direction.auc_area),
        "apr_area": float(direction.apr_area),
    }


def report_to_dict(reports: dict[str, EvalReport], config: dict) -> dict:
    """Deterministic document for a set of per-method reports.

    Wall-clock timings are deliberately left out so repeated runs with the
    same config and seed serialize to identical bytes.
    """
    methods = {}
    base_auc = base_apr = None
    for name, report in reports.items():
        methods[name] = {
            "attribution_eval_count": report.attribution_eval_count,
            "metric_eval_count": report.metric_eval_count,
            "summary": {
                "aupd_mean": report.aupd_mean,
                "aupp_mean": report.aupp_mean,
                "auaucd": report.auaucd,
                "auaprd": report.auaprd,
                "auaucp": report.auaucp,
                "auaprp": report.auaprp,
            },
            "most": _direction_to_dict(report.most),
            "least": _direction_to_dict(report.least),
        }
        base_auc = report.most.auc_at_k[0]
        base_apr = report.most.apr_at_k[0]
    return {
        "config": config,
        "base": {"auc": base_auc, "apr": base_apr},
        "methods": methods,
    }


def write_report(document: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def read_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from None


_SUMMARY_COLUMNS = ["aupd_mean", "auaucd", "auaprd", "aupp_mean", "auaucp", "auaprp"]


def summary_table(document: dict) -> str:
    """Aligned text table of the headline metrics, one row per method."""
    header = ["method"] + [c.upper() for c in _SUMMARY_COLUMNS] + ["ATTR_EVALS"]
    rows = [header]
    for method in sorted(document["methods"]):
        entry = document["methods"][method]
        row = [method]
        for column in _SUMMARY_COLUMNS:
            value = entry["summary"][column]
            row.append("nan" if value is None else f"{value:.6f}")
        row.append(str(entry["attribution_eval_count"]))
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def curve_rows(document: dict) -> list[tuple[str, str, str, int, float]]:
    """Plot-data export: (method, direction, metric, k, value) series."""
    rows = []
    for method in sorted(document["methods"]):
        entry = document["methods"][method]
        for direction_name in ("most", "least"):
            direction = entry[direction_name]
            for metric, key in (
                ("auc", "auc_at_k"),
                ("apr", "apr_at_k"),
                ("mean_cumulative", "mean_cumulative_at_k"),
            ):
                for k, value in enumerate(direction[key]):
                    rows.append((method, direction["direction"], metric, k, float(value)))
    return rows


def write_curves_csv(document: dict, path: str | Path) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["method", "direction", "metric", "k", "value"])
    for row in curve_rows(document):
        writer.writerow([row[0], row[1], row[2], row[3], _float_repr(row[4])])
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")
