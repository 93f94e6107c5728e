"""JSON file formats: point sets, prototype dictionaries, ground truth.

Point set::

    {"featureDim": F, "points": [{"frame": int, "x": num, "y": num,
                                  "saliency": num, "features": [num, ...]}, ...]}

Dictionary::

    {"prototypes": [{"label": str, "model": <point set>}, ...]}

Ground-truth sidecar::

    {"z": [int or "eps", ...]}

Floats in files are written with the shortest representation that parses
back to the same value, so files round-trip exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Sequence

from .core import (EPS, ChainMatchError, DimensionMismatch, SpaceTimePoint,
                   build_model_chain)
from .recognition import PrototypeSet

EPS_TOKEN = "eps"


class FormatError(ChainMatchError, ValueError):
    """Input does not parse against the expected schema."""


def _num(v: Any, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"{what} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise FormatError(f"{what} must be finite")
    return float(v)


def points_from_obj(obj: Any) -> tuple[list[SpaceTimePoint], int]:
    if not isinstance(obj, dict) or "points" not in obj or "featureDim" not in obj:
        raise FormatError("point set needs 'featureDim' and 'points'")
    F = obj["featureDim"]
    if isinstance(F, bool) or not isinstance(F, int) or F < 1:
        raise FormatError(f"featureDim must be a positive integer, got {F!r}")
    raw = obj["points"]
    if not isinstance(raw, list):
        raise FormatError("'points' must be a list")
    points = []
    for n, p in enumerate(raw):
        if not isinstance(p, dict):
            raise FormatError(f"point {n} is not an object")
        try:
            frame, feats = p["frame"], p["features"]
            x, y, sal = p["x"], p["y"], p["saliency"]
        except KeyError as exc:
            raise FormatError(f"point {n} lacks field {exc.args[0]!r}") from None
        if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
            raise FormatError(f"point {n}: frame must be a non-negative integer")
        if not isinstance(feats, list):
            raise FormatError(f"point {n}: features must be a list")
        values = tuple(_num(v, f"point {n} feature") for v in feats)
        if len(values) != F:
            raise DimensionMismatch(
                f"point {n} has {len(values)} features, featureDim is {F}")
        points.append(SpaceTimePoint(frame, _num(x, "x"), _num(y, "y"),
                                     _num(sal, "saliency"), values))
    return points, F


def points_to_obj(points: Sequence[SpaceTimePoint], feature_dim: int) -> dict:
    return {
        "featureDim": feature_dim,
        "points": [
            {"frame": p.frame, "x": p.x, "y": p.y, "saliency": p.saliency,
             "features": list(p.features)}
            for p in points
        ],
    }


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None


def _write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def load_points(path: str | Path) -> tuple[list[SpaceTimePoint], int]:
    return points_from_obj(_read_json(path))


def save_points(path: str | Path, points: Sequence[SpaceTimePoint], feature_dim: int) -> None:
    _write_json(path, points_to_obj(points, feature_dim))


def load_dictionary(path: str | Path) -> PrototypeSet:
    obj = _read_json(path)
    if not isinstance(obj, dict) or not isinstance(obj.get("prototypes"), list):
        raise FormatError("dictionary needs a 'prototypes' list")
    protos = []
    for k, entry in enumerate(obj["prototypes"]):
        if not isinstance(entry, dict) or "label" not in entry or "model" not in entry:
            raise FormatError(f"prototype {k} needs 'label' and 'model'")
        label = entry["label"]
        if not isinstance(label, str) or not label:
            raise FormatError(f"prototype {k}: label must be a non-empty string")
        points, _ = points_from_obj(entry["model"])
        protos.append((label, build_model_chain(points)))
    return PrototypeSet(tuple(protos))


def save_dictionary(path: str | Path, prototypes: PrototypeSet) -> None:
    _write_json(path, {"prototypes": [
        {"label": label, "model": points_to_obj(chain.points, chain.feature_dim)}
        for label, chain in prototypes.prototypes
    ]})


def assignment_to_wire(z: Sequence[int]) -> list:
    return [EPS_TOKEN if v == EPS else int(v) for v in z]


def assignment_from_wire(values: Sequence) -> tuple[int, ...]:
    out = []
    for v in values:
        if v == EPS_TOKEN:
            out.append(EPS)
        elif isinstance(v, int) and not isinstance(v, bool) and v >= 0:
            out.append(v)
        else:
            raise FormatError(f"assignment entry {v!r} is neither a node index nor 'eps'")
    return tuple(out)


def save_truth(path: str | Path, z: Sequence[int]) -> None:
    _write_json(path, {"z": assignment_to_wire(z)})


def load_truth(path: str | Path) -> tuple[int, ...]:
    obj = _read_json(path)
    if not isinstance(obj, dict) or not isinstance(obj.get("z"), list):
        raise FormatError("ground truth needs a 'z' list")
    return assignment_from_wire(obj["z"])


def sig9(x: float) -> float:
    """Round to 9 significant digits for reporting."""
    if not math.isfinite(x):
        raise ValueError("non-finite values are never serialized")
    return float(f"{x:.9g}")
