"""CSV datasets, JSON model files, synthetic data and decision-grid export.

CSV layout: ``d`` numeric feature columns followed by one integer label
column, with an optional header row (recognised by a non-numeric first field).
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import Dataset, KernelModel, KernelSpec, LinearModel
from .errors import (InvalidInputError, ModelFileError, ParseError,
                     UnsupportedOperationError)
from .probabilistic import MulticlassModel

FORMAT_VERSION = "1"
GRID_HEADER = ("x", "y", "f", "sign")


# -- stream helpers ---------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    return raw


def _write_text(sink, text: str):
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def _number(field: str) -> float:
    # typographic minus signs appear in hand-written data
    return float(field.strip().replace("−", "-"))


def _is_number(field: str) -> bool:
    try:
        return math.isfinite(_number(field))
    except ValueError:
        return False


def _rows(text: str):
    """Yield ``(line_number, fields)`` for non-blank lines, skipping a header."""
    first = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if first:
            first = False
            if not _is_number(fields[0]):
                continue
        yield lineno, fields


def _label(field: str, lineno: int) -> int:
    try:
        value = _number(field)
    except ValueError:
        raise ParseError(f"label {field.strip()!r} is not numeric", line=lineno) from None
    if not math.isfinite(value) or value != int(value):
        raise ParseError(f"label {field.strip()!r} is not an integer", line=lineno)
    return int(value)


def read_table(source, dimension: int | None = None):
    """Parse CSV rows into ``(features, labels_or_None)``.

    With ``dimension`` given, rows of width ``dimension`` are unlabelled and
    rows of width ``dimension + 1`` labelled; otherwise the last column is
    always the label.
    """
    text = _read_text(source)
    X, y = [], []
    width = None
    for lineno, fields in _rows(text):
        if width is None:
            width = len(fields)
            if dimension is not None and width not in (dimension, dimension + 1):
                raise ParseError(
                    f"expected {dimension} or {dimension + 1} columns, got {width}", line=lineno)
            if dimension is None and width < 2:
                raise ParseError("need at least one feature column and a label column",
                                 line=lineno)
        elif len(fields) != width:
            raise ParseError(f"expected {width} columns, got {len(fields)}", line=lineno)
        labelled = dimension is None or width == dimension + 1
        feats = fields[:-1] if labelled else fields
        try:
            row = [_number(f) for f in feats]
        except ValueError:
            raise ParseError("non-numeric feature value", line=lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("feature values must be finite", line=lineno)
        X.append(row)
        if labelled:
            y.append(_label(fields[-1], lineno))
    if not X:
        raise ParseError("no data rows", line=1)
    features = np.array(X, dtype=np.float64)
    return features, (np.array(y, dtype=np.int64) if y else None)


def load_csv(source, two_class: bool = False) -> Dataset:
    """Read a labelled dataset.  With ``two_class`` the labels are validated for
    a two-class trainer and ``{0, 1}`` is remapped to ``{-1, +1}``."""
    X, y = read_table(source)
    data = Dataset(X, y)
    return data.as_two_class() if two_class else data


def _fmt(v: float) -> str:
    return repr(float(v))


def dataset_to_csv(data: Dataset, header: bool = False) -> str:
    buf = io.StringIO()
    if header:
        buf.write(",".join([f"x{k + 1}" for k in range(data.dimension)] + ["y"]) + "\n")
    for x, label in zip(data.features, data.labels):
        buf.write(",".join([_fmt(v) for v in x] + [str(int(label))]) + "\n")
    return buf.getvalue()


def save_csv(data: Dataset, sink, header: bool = False):
    _write_text(sink, dataset_to_csv(data, header))


# -- model files ------------------------------------------------------------

def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {"format_version": FORMAT_VERSION, "model_kind": "linear",
                "dimension": model.dimension, "weights": model.weights.tolist(),
                "bias": model.bias}
    if isinstance(model, MulticlassModel):
        return {"format_version": FORMAT_VERSION, "model_kind": "multiclass",
                "dimension": model.dimension, "classes": model.classes.tolist(),
                "weights": model.weight_matrix.tolist(), "biases": model.biases.tolist()}
    if isinstance(model, KernelModel):
        return {"format_version": FORMAT_VERSION, "model_kind": "kernel",
                "dimension": model.dimension, "kernel": model.kernel.to_dict(),
                "coefficients": model.coefficients.tolist(), "bias": model.bias,
                "support_points": model.support_points.tolist(),
                "support_labels": model.support_labels.tolist()}
    raise UnsupportedOperationError(f"cannot serialise {type(model).__name__}")


def model_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise ModelFileError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"unsupported format_version {version!r}")
    kind = doc.get("model_kind")
    try:
        if kind == "linear":
            model = LinearModel(doc["weights"], doc["bias"])
        elif kind == "multiclass":
            model = MulticlassModel.from_arrays(doc["weights"], doc["biases"], doc["classes"])
        elif kind == "kernel":
            model = KernelModel(doc["coefficients"], doc["bias"], KernelSpec(**doc["kernel"]),
                                doc["support_points"], doc["support_labels"])
        else:
            raise ModelFileError(f"unknown model_kind {kind!r}")
    except KeyError as exc:
        raise ModelFileError(f"model file lacks field {exc.args[0]!r}") from None
    except (TypeError, ValueError, InvalidInputError) as exc:
        raise ModelFileError(f"malformed {kind} model: {exc}") from None
    if doc.get("dimension") != model.dimension:
        raise ModelFileError("dimension field does not match the stored parameters")
    return model


def save_model(model, sink):
    """Write ``model`` as JSON.  Floats use the shortest repr that round-trips,
    so loading reproduces every value bit for bit."""
    _write_text(sink, json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(source):
    try:
        doc = json.loads(_read_text(source))
    except (json.JSONDecodeError, ParseError) as exc:
        raise ModelFileError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(doc)


# -- synthetic data ---------------------------------------------------------

SHAPES = ("blobs", "xor", "circles", "overlap_1d")


@dataclass(frozen=True)
class SyntheticSpec:
    """Synthetic dataset recipe.

    ``separation`` is the blob centre distance in units of ``noise`` (absolute
    when ``noise`` is 0).  ``num_classes > 2`` applies to blobs only and
    produces labels ``1..m``; two-class shapes use ``+1 / -1``.
    """

    shape: str = "blobs"
    samples_per_class: int = 20
    noise: float = 1.0
    separation: float = 8.0
    seed: int = 0
    num_classes: int = 2

    def __post_init__(self):
        shape = "overlap_1d" if self.shape == "overlap1d" else self.shape
        if shape not in SHAPES:
            raise InvalidInputError(f"unknown shape {self.shape!r}; choose from {SHAPES}")
        object.__setattr__(self, "shape", shape)
        if self.samples_per_class < 1:
            raise InvalidInputError("samples_per_class must be >= 1")
        if self.noise < 0 or not self.separation > 0:
            raise InvalidInputError("noise must be >= 0 and separation > 0")
        if self.num_classes < 2 or (self.num_classes > 2 and shape != "blobs"):
            raise InvalidInputError("num_classes > 2 is only available for blobs")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    k, s = spec.samples_per_class, spec.noise
    dist = spec.separation * s if s > 0 else spec.separation
    if spec.shape == "blobs":
        m = spec.num_classes
        phase = rng.uniform(0, 2 * np.pi)
        angles = phase + 2 * np.pi * np.arange(m) / m
        radius = dist / (2 * np.sin(np.pi / m))
        centres = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        X = np.vstack([c + s * rng.standard_normal((k, 2)) for c in centres])
        labels = [1, -1] if m == 2 else list(range(1, m + 1))
        y = np.repeat(labels, k)
    elif spec.shape == "xor":
        corners = {1: np.array([[1.0, 1.0], [-1.0, -1.0]]),
                   -1: np.array([[1.0, -1.0], [-1.0, 1.0]])}
        X = np.vstack([corners[c][np.arange(k) % 2] + s * rng.standard_normal((k, 2))
                       for c in (1, -1)])
        y = np.repeat([1, -1], k)
    elif spec.shape == "circles":
        parts = []
        for r in (1.0, 2.0):
            t = rng.uniform(0, 2 * np.pi, k)
            rr = r + s * rng.standard_normal(k)
            parts.append(np.stack([rr * np.cos(t), rr * np.sin(t)], axis=1))
        X = np.vstack(parts)
        y = np.repeat([1, -1], k)
    else:
        # unit-half-width bands whose centres are ``dist`` apart
        X = np.concatenate([rng.uniform(-1, 1, k) + dist / 2,
                            rng.uniform(-1, 1, k) - dist / 2])[:, None]
        y = np.repeat([1, -1], k)
    return Dataset(X, y)


# -- decision grids ---------------------------------------------------------

def decision_and_label(model, X):
    """Decision values and predicted labels for any model kind.

    Multi-class models report the winning posterior as the decision value.
    """
    if isinstance(model, MulticlassModel):
        post = model.posteriors(X)
        return post.max(axis=1), model.predict(X)
    f = model.decision_function(X)
    return f, np.where(f >= 0, 1, -1)


def export_decision_grid(model, bounds, resolution: int):
    """Rows ``(x, y, f, sign)`` over a ``resolution x resolution`` grid, row-major
    in ``y``; ``sign`` maps ``f = 0`` to +1."""
    if model.dimension != 2:
        raise UnsupportedOperationError("decision grids need a 2-D model")
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    if resolution < 1:
        raise InvalidInputError("resolution must be >= 1")
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    f, label = decision_and_label(model, pts)
    return [(float(a), float(b), float(c), int(d)) for (a, b), c, d in zip(pts, f, label)]


def write_grid_tsv(rows: Iterable[tuple], sink):
    lines = ["\t".join(GRID_HEADER)]
    lines += ["\t".join([_fmt(x), _fmt(y), _fmt(f), str(s)]) for x, y, f, s in rows]
    _write_text(sink, "\n".join(lines) + "\n")
