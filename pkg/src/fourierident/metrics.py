"""Identification metrics and ground-truth files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError, ParseError, UndefinedTruthError
from .fourier_system import Dictionary


@dataclass(frozen=True)
class Metrics:
    e2: float  # relative coefficient error
    e_res: float  # relative residual of the unsmoothed system
    tpr: float
    ppv: float

    def to_dict(self):
        return asdict(self)


def support_of(c, tol: float = 0.0) -> set:
    return set(np.flatnonzero(np.abs(np.asarray(c)) > tol).tolist())


def compute_metrics(c_pred, c_true, F=None, b=None) -> Metrics:
    """Coefficient error, residual and support recovery of ``c_pred`` against ``c_true``.

    ``F`` and ``b`` are the unsmoothed system rows on the meaningful region;
    without them ``e_res`` is NaN.  An empty prediction has PPV 0.
    """
    c_pred = np.asarray(c_pred, dtype=np.float64)
    c_true = np.asarray(c_true, dtype=np.float64)
    if c_pred.shape != c_true.shape or c_pred.ndim != 1:
        raise InvalidParameterError(f"coefficient shapes differ: {c_pred.shape} vs {c_true.shape}")
    norm = np.linalg.norm(c_true)
    if norm == 0:
        raise UndefinedTruthError("true coefficient vector is all zero")
    e2 = float(np.linalg.norm(c_pred - c_true) / norm)

    e_res = math.nan
    if F is not None and b is not None:
        b = np.asarray(b)
        bn = np.linalg.norm(b)
        e_res = float(np.linalg.norm(np.asarray(F) @ c_pred - b) / bn) if bn > 0 else math.inf

    pred, true = support_of(c_pred), support_of(c_true)
    hit = len(pred & true)
    tpr = hit / len(true)
    ppv = hit / len(pred) if pred else 0.0
    return Metrics(e2, e_res, tpr, ppv)


# --- truth files ---------------------------------------------------------------


def truth_vector(terms, dictionary: Dictionary) -> np.ndarray:
    """Dense coefficient vector from ``(alpha, beta, c)`` triples."""
    c = np.zeros(len(dictionary))
    for a, b, coef in terms:
        l = dictionary.get(int(a), int(b))
        if l is None:
            raise InvalidParameterError(f"true term ({a}, {b}) is not in the dictionary")
        c[l] = float(coef)
    return c


def save_truth(terms, path) -> None:
    payload = {"terms": [{"alpha": int(a), "beta": int(b), "coefficient": float(c)} for a, b, c in terms]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_truth(path) -> tuple:
    """Triples from a truth file; accepts ``{"terms": [...]}`` or a bare list,
    with entries as objects or ``[alpha, beta, c]`` lists."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read truth file {path}: {exc}") from exc
    items = raw.get("terms") if isinstance(raw, dict) else raw
    if not isinstance(items, list):
        raise ParseError(f"{path}: expected a list of terms")
    terms = []
    for item in items:
        try:
            if isinstance(item, dict):
                terms.append((int(item["alpha"]), int(item["beta"]), float(item["coefficient"])))
            else:
                a, b, c = item
                terms.append((int(a), int(b), float(c)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad term {item!r}") from exc
    return tuple(terms)
