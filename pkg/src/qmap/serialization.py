"""JSON wire format for map descriptions and analysis reports.

Complex numbers travel as ``[re, im]`` pairs. Floats use Python's shortest
round-trip repr, so parse followed by emit is byte-stable.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import SchemaError
from .forms import phi_r_family, qpure_invertible_canonical, state_map
from .superop import (
    RectangularMap,
    Superoperator,
    conjugate_map,
    rectangular_schur_map,
    schur_map,
    superop_from_kraus,
)

KINDS = ("action_matrix", "kraus", "schur", "state_map", "canonical_form", "phi_r", "qpure_canonical")


@dataclass
class MapDescription:
    kind: str
    n: int
    payload: dict
    label: str = ""
    cols: int | None = None  # set for rectangular maps on n x cols matrices

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        if self.cols is not None:
            d["cols"] = self.cols
        d["payload"] = self.payload
        if self.label:
            d["label"] = self.label
        return d


# ---------------------------------------------------------------- encoding


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0 else x  # drop negative zero


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[encode_complex(z) for z in row] for row in M]


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else [encode_complex(z) for z in obj]
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _clean(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- decoding


def _complex(value, path: str) -> complex:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise SchemaError(path, "expected a complex number as [re, im]")
    return complex(value[0], value[1])


def _real(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(path, "expected a real number")
    return float(value)


def decode_matrix(value, path: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise SchemaError(path, "expected a matrix (list of rows)")
    cols = len(value[0])
    rows = []
    for i, row in enumerate(value):
        if len(row) != cols:
            raise SchemaError(f"{path}[{i}]", f"row has {len(row)} entries, expected {cols}")
        rows.append([_complex(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)])
    M = np.array(rows, dtype=complex)
    if shape is not None and M.shape != shape:
        raise SchemaError(path, f"expected shape {list(shape)}, got {list(M.shape)}")
    return M


def _require(payload: dict, key: str, path: str):
    if key not in payload:
        raise SchemaError(f"{path}.{key}", "missing field")
    return payload[key]


def description_from_obj(obj: Any, path: str = "$") -> MapDescription:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    kind = _require(obj, "kind", path)
    if kind not in KINDS:
        raise SchemaError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    n = _require(obj, "n", path)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError(f"{path}.n", "expected a positive integer")
    cols = obj.get("cols")
    if cols is not None and (not isinstance(cols, int) or cols < 1):
        raise SchemaError(f"{path}.cols", "expected a positive integer")
    payload = _require(obj, "payload", path)
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}.payload", "expected an object")
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise SchemaError(f"{path}.label", "expected a string")
    desc = MapDescription(kind, n, payload, label, cols)
    build_map(desc, path)  # validates the payload
    return desc


def parse_map(text: bytes | str) -> MapDescription:
    """Validated map description from a JSON document."""
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    return description_from_obj(obj)


def emit_map(desc: MapDescription) -> bytes:
    return dumps(desc.to_dict()).encode()


def build_map(desc: MapDescription, path: str = "$"):
    """The Superoperator (or RectangularMap) a description denotes."""
    n, p, pp = desc.n, desc.payload, f"{path}.payload"
    cols = desc.cols if desc.cols is not None else n
    rect = cols != n
    kind = desc.kind
    if rect and kind not in ("action_matrix", "schur"):
        raise SchemaError(f"{path}.cols", f"kind {kind!r} only describes square maps")
    if kind == "action_matrix":
        size = n * cols
        A = decode_matrix(_require(p, "matrix", pp), f"{pp}.matrix", (size, size))
        return RectangularMap(A, (n, cols), (n, cols)) if rect else Superoperator(A)
    if kind == "schur":
        M = decode_matrix(_require(p, "mask", pp), f"{pp}.mask", (n, cols))
        return rectangular_schur_map(M) if rect else schur_map(M)
    if kind == "kraus":
        ops = _require(p, "operators", pp)
        if not isinstance(ops, list) or not ops:
            raise SchemaError(f"{pp}.operators", "expected a non-empty list of matrices")
        mats = [decode_matrix(S, f"{pp}.operators[{i}]", (n, n)) for i, S in enumerate(ops)]
        return superop_from_kraus(n, mats)
    if kind == "state_map":
        if ("weights" in p) == ("density" in p):
            raise SchemaError(pp, "give exactly one of 'weights' or 'density'")
        if "weights" in p:
            w = p["weights"]
            if not isinstance(w, list) or len(w) != n:
                raise SchemaError(f"{pp}.weights", f"expected {n} reals")
            return state_map(weights=[_real(x, f"{pp}.weights[{i}]") for i, x in enumerate(w)])
        return state_map(density=decode_matrix(p["density"], f"{pp}.density", (n, n)))
    if kind == "phi_r":
        if n != 2:
            raise SchemaError(f"{path}.n", "phi_r acts on M_2")
        r = _real(_require(p, "r", pp), f"{pp}.r")
        try:
            return phi_r_family(r)
        except ValueError as exc:
            raise SchemaError(f"{pp}.r", str(exc)) from exc
    if kind == "qpure_canonical":
        lams = _require(p, "lambdas", pp)
        if not isinstance(lams, list) or len(lams) != n:
            raise SchemaError(f"{pp}.lambdas", f"expected {n} reals")
        try:
            return qpure_invertible_canonical([_real(x, f"{pp}.lambdas[{i}]") for i, x in enumerate(lams)])
        except ValueError as exc:
            raise SchemaError(f"{pp}.lambdas", str(exc)) from exc
    if kind == "canonical_form":
        from .classify import reconstruct

        family = _require(p, "family", pp)
        params = dict(p.get("params", {}))
        if "action" in params:
            params["action"] = decode_matrix(params["action"], f"{pp}.params.action")
        try:
            phi = reconstruct(family, params)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{pp}.params", f"bad parameters for {family}: {exc}") from exc
        except Exception as exc:  # unknown family
            raise SchemaError(f"{pp}.family", str(exc)) from exc
        if phi.n != n:
            raise SchemaError(f"{path}.n", f"{family} acts on M_{phi.n}")
        if "conjugator" in p:
            U = decode_matrix(p["conjugator"], f"{pp}.conjugator", (n, n))
            try:
                phi = conjugate_map(phi, U)
            except Exception as exc:
                raise SchemaError(f"{pp}.conjugator", str(exc)) from exc
        return phi
    raise SchemaError(f"{path}.kind", f"unknown kind {kind!r}")


def describe_action(phi, label: str = "") -> MapDescription:
    """Lossless ``action_matrix`` description of an arbitrary map."""
    n, cols = phi.in_shape
    return MapDescription("action_matrix", n, {"matrix": encode_matrix(phi.action)}, label,
                          None if cols == n else cols)


# ---------------------------------------------------------------- reports


@dataclass
class AnalysisReport:
    input_label: str
    verdicts: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)
    tool_version: str = ""
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "input_label": self.input_label,
            "verdicts": self.verdicts,
            "config": self.config_echo,
            "seed": self.seed,
            "tool_version": self.tool_version,
        }


def emit_report(report: AnalysisReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return dumps(report.to_dict()).encode()
    if fmt == "text":
        return _text_report(report).encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(text: bytes | str) -> AnalysisReport:
    obj = json.loads(text)
    return AnalysisReport(obj["input_label"], obj["verdicts"], obj["config"], obj["tool_version"], obj.get("seed"))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _text_lines(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key, value in obj.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text_lines(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], list) and len(value) > 6:
            lines.append(f"{pad}{key}: [{len(value)} entries]")
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return lines


def _text_report(report: AnalysisReport) -> str:
    verdicts = jsonable(report.verdicts)
    lines = [f"qmap report for {report.input_label or '<unnamed>'}"]
    lines.extend(_text_lines(verdicts, 1))
    cfg = ", ".join(f"{k}={_fmt(v)}" for k, v in report.config_echo.items())
    lines.append(f"  config: {cfg}")
    if report.seed is not None:
        lines.append(f"  seed: {report.seed}")
    lines.append(f"  tool_version: {report.tool_version}")
    return "\n".join(lines) + "\n"
