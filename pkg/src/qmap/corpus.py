"""Regression corpus of documented examples, replayed through the CLI verbs.

A document is ``{"label", "verb", "inputs", "expect"}`` where ``expect`` maps
dotted paths into the report verdicts to either an exact JSON value or
``{"approx": value, "tol": tol}``.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ToleranceConfig
from .serialization import build_map, description_from_obj, jsonable
from .superop import Superoperator

SEEDED_DRAWS = 3


def packaged_documents() -> list[dict]:
    docs = []
    root = resources.files("qmap") / "corpus"
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            docs.append(json.loads(entry.read_text()))
    return docs


def _documents_from(paths) -> list[dict]:
    docs = []
    for p in map(Path, paths):
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        docs.extend(json.loads(f.read_text()) for f in files)
    return docs


def lookup(obj, path: str):
    for part in path.split("."):
        if isinstance(obj, list):
            obj = obj[int(part)]
        else:
            obj = obj[part]
    return obj


def _matches(actual, expected) -> bool:
    if isinstance(expected, dict) and "approx" in expected:
        tol = expected.get("tol", 1e-9)
        try:
            a = np.asarray(actual, dtype=float)
            e = np.asarray(expected["approx"], dtype=float)
        except (TypeError, ValueError):
            return False
        return a.shape == e.shape and bool(np.all(np.abs(a - e) <= tol))
    return actual == expected


def check_document(doc: dict, cfg: ToleranceConfig, seed: int = 0) -> list[str]:
    """Mismatch messages for one document (empty when it passes)."""
    from .cli import run_verb

    report = run_verb(doc["verb"], doc["inputs"], cfg, seed)
    verdicts = jsonable(report.verdicts)
    problems = []
    for path, expected in doc["expect"].items():
        try:
            actual = lookup(verdicts, path)
        except (KeyError, IndexError, TypeError, ValueError):
            problems.append(f"{path}: missing from report")
            continue
        if not _matches(actual, expected):
            problems.append(f"{path}: expected {expected!r}, got {actual!r}")
    return problems


def _seeded_checks(seed: int, cfg: ToleranceConfig) -> list[tuple[str, list[str]]]:
    from .classify import M2_FAMILIES, classify_unital_qpos_m2, random_unital_qpos_m2_with_params

    results = []
    for k in range(SEEDED_DRAWS):
        for cls in M2_FAMILIES:
            phi, _, params, _ = random_unital_qpos_m2_with_params(seed + k, cls)
            form = classify_unital_qpos_m2(phi, cfg)
            problems = []
            if form.family != cls:
                problems.append(f"family: expected {cls}, got {form.family}")
            for key, value in params.items():
                if not np.allclose(form.params.get(key), value, atol=1e-6):
                    problems.append(f"{key}: expected {value}, got {form.params.get(key)}")
            results.append((f"seeded {cls} draw (seed {seed + k})", problems))
    return results


def verify_corpus(paths, cfg: ToleranceConfig, seed: int, out) -> bool:
    docs = packaged_documents() + _documents_from(paths)
    results = [(doc["label"], check_document(doc, cfg, seed)) for doc in docs]
    results += _seeded_checks(seed, cfg)
    for label, problems in results:
        out.write(f"{'PASS' if not problems else 'FAIL'} {label}\n")
        for msg in problems:
            out.write(f"     {msg}\n")
    failed = sum(1 for _, p in results if p)
    out.write(f"{len(results) - failed}/{len(results)} corpus checks passed\n")
    return failed == 0


def _map_descriptions(obj, path: str):
    """Every embedded map description, found by its ``kind`` field."""
    if isinstance(obj, dict):
        if "kind" in obj and "payload" in obj:
            yield path, obj
            return
        for key, value in obj.items():
            yield from _map_descriptions(value, f"{path}.{key}")


def corpus_maps(paths=()) -> list[tuple[str, Superoperator]]:
    """``(name, map)`` for every square map in the corpus, assembled corners included."""
    from .cli import _corner_problem

    out = []
    for doc in packaged_documents() + _documents_from(paths):
        for path, obj in _map_descriptions(doc["inputs"], "inputs"):
            phi = build_map(description_from_obj(obj, path), path)
            if isinstance(phi, Superoperator):
                out.append((f"{doc['label']} [{path}]", phi))
        if doc["verb"] in ("corner", "witness") and any(k in doc["inputs"] for k in ("flip", "block", "gamma")):
            out.append((f"{doc['label']} [assembled]", _corner_problem(doc["inputs"])[0].upsilon))
    return out
