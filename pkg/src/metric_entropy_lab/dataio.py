"""CSV datasets of sampled curves and JSON instance descriptions.

Dataset CSV: an optional leading label column (``y`` for responses, ``label``
for 0/1 groups) followed by one column per grid abscissa.  The header row
carries the abscissae; every following row is one curve.  Lines starting with
``#`` are comments.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .divergences import DiscreteMeasure
from .errors import DomainError, GridMismatchError
from .metric_core import MetricSpec, PointSet
from .models import (
    NoiseSpec,
    RegressionInstance,
    SmoothnessSpec,
    lipschitz_pointset,
    make_regression_map,
    monotone_pointset,
    tilted_classification_instance,
)

LABEL_COLUMNS = ("y", "label")


@dataclass
class Dataset:
    points: PointSet
    labels: np.ndarray | None = None
    label_name: str | None = None


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_dataset(path, metric: MetricSpec | None = None) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(_data_lines(text)))
    if len(rows) < 2:
        raise DomainError(f"{path}: need a header row and at least one curve")
    header = [h.strip() for h in rows[0]]
    label_name = header[0] if header[0] in LABEL_COLUMNS else None
    start = 1 if label_name else 0
    try:
        grid = np.array([float(h) for h in header[start:]])
        body = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise DomainError(f"{path}: non-numeric entry ({exc})") from None
    if body.ndim != 2 or body.shape[1] != len(header):
        raise DomainError(f"{path}: ragged rows")
    labels = body[:, 0] if label_name else None
    if label_name == "label":
        if not np.all(np.isin(labels, (0.0, 1.0))):
            raise DomainError(f"{path}: labels must be 0 or 1")
        labels = labels.astype(np.int8)
    points = PointSet(grid, body[:, start:], metric)
    return Dataset(points, labels, label_name)


def format_dataset(points: PointSet, labels=None, label_name: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = [repr(float(t)) for t in points.grid]
    if labels is not None:
        head = [label_name or "y"] + head
    w.writerow(head)
    for i in range(len(points)):
        row = [repr(float(v)) for v in points.values[i]]
        if labels is not None:
            lab = labels[i]
            row = [str(int(lab)) if label_name == "label" else repr(float(lab))] + row
        w.writerow(row)
    return buf.getvalue()


def check_same_grid(a: PointSet, b: PointSet) -> None:
    if not a.same_grid(b):
        raise GridMismatchError("datasets are sampled on different grids")


# ---------------------------------------------------------------- instance JSON


def build_pool(spec: dict, metric: MetricSpec, base_dir: Path | None = None) -> PointSet:
    """Point pool from ``{"dataset": path}`` or a generator description."""
    if "dataset" in spec:
        p = Path(spec["dataset"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return read_dataset(p, metric).points
    gen = spec.get("generator", "monotone")
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    grid = np.linspace(0.0, 1.0, int(spec.get("grid", 51)))
    n = int(spec.get("n", 100))
    if gen == "lipschitz":
        return lipschitz_pointset(n, float(spec.get("M", 1.0)), grid, rng, metric)
    if gen == "monotone":
        bands = spec.get("bands")
        if not bands:
            return monotone_pointset(n, grid, rng, metric)
        parts = [monotone_pointset(n, grid, rng, metric, lo, hi).values for lo, hi in bands]
        return PointSet(grid, np.vstack(parts), metric)
    raise DomainError(f"unknown pool generator {gen!r}")


def build_design(points: PointSet, spec) -> DiscreteMeasure:
    if spec is None or spec == "uniform" or spec.get("weights", "uniform") == "uniform":
        return DiscreteMeasure.uniform(points)
    weights = np.asarray(spec["weights"], dtype=float)
    support = spec.get("support")
    return DiscreteMeasure.from_masses(points, weights, support)


def load_instance(spec: dict, task: str, base_dir: Path | None = None):
    """Build the regression or classification instance described by ``spec``."""
    metric = MetricSpec.parse(spec.get("metric", "sup"))
    points = build_pool(spec.get("pool", {}), metric, base_dir)
    smooth = SmoothnessSpec(float(spec.get("beta", 1.0)), float(spec.get("C", 1.0)))
    if task in ("regress", "pointwise"):
        g_spec = spec.get("g", {"kind": "mean"})
        noise_spec = spec.get("noise", {})
        noise = NoiseSpec(
            noise_spec.get("family", "gaussian"),
            float(noise_spec.get("scale", 0.5)),
            noise_spec.get("c_v"),
        )
        design = build_design(points, spec.get("design"))
        return RegressionInstance(design, make_regression_map(g_spec, smooth.C), noise, smooth, g_spec)
    if task == "classify":
        cl = spec.get("classification", {})
        return tilted_classification_instance(
            points,
            tilt=float(cl.get("tilt", 2.0)),
            kappa=float(spec.get("kappa", cl.get("kappa", 0.0))),
            w=float(spec.get("w", cl.get("w", 0.5))),
            smoothness=smooth if "C" in spec else None,
            functional_kind=cl.get("functional", "mean"),
        )
    raise DomainError(f"unknown task {task!r}")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
