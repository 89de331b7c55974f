"""Command-line front end: ``qmap <verb> ...``.

Exit codes: 0 analysis completed (verdicts may still be negative),
1 usage, schema or corpus mismatch, 2 internal numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    CanonicalForm,
    classify_E2,
    classify_E3,
    classify_unital_qpos_m2,
    is_qpure_m2,
    canonical_rank2_params,
)
from .config import ToleranceConfig
from .corners import (
    CornerProblem,
    flip_corner,
    hypermax_refutation_search,
    is_q_corner,
    corner_cp,
    limit_corner,
    rank_obstruction,
    rectangular_idempotency,
)
from .errors import ClassificationError, QMapError, SchemaError
from .forms import rank2_witness, state_density
from .limits import annihilator_compression_witness, is_idempotent_ucp, limit_map, q_dominates
from .resolvent import certify_q_positive, negative_eigenvalues
from .serialization import (
    AnalysisReport,
    build_map,
    decode_matrix,
    description_from_obj,
    emit_report,
)
from .superop import Superoperator, conjugate_map, is_completely_positive

VERBS = ("analyze", "classify", "limit", "dominates", "corner", "witness")


def _load_map(obj, path: str):
    desc = description_from_obj(obj, path)
    return build_map(desc, path), desc.label


def _verdict_dict(v) -> dict:
    d = v.to_dict()
    d.pop("min_eig_trace")
    d["samples"] = len(v.min_eig_trace)
    d["min_sampled_eig"] = min((e for _, e in v.min_eig_trace), default=None)
    return d


def _form_dict(form: CanonicalForm) -> dict:
    params = {k: v for k, v in form.params.items() if k != "action"}
    out = {
        "family": form.family,
        "description": form.describe(),
        "params": params,
        "conjugator": form.conjugator,
        "residual": form.residual,
    }
    if form.generator is not None:
        g = form.generator
        out["generator"] = {
            "Y": g.Y,
            "residual": g.residual,
            "skew_defect": g.skew_defect,
            "trace_defect": g.trace_defect,
            "qpure_canonical": g.is_qpure_canonical(),
        }
    return out


def _classification(phi: Superoperator, cfg: ToleranceConfig) -> dict:
    try:
        if phi.n == 2 and is_idempotent_ucp(phi, cfg):
            return _form_dict(classify_E2(phi, cfg))
        if phi.n == 2:
            form = classify_unital_qpos_m2(phi, cfg)
            out = _form_dict(form)
            out["q_pure"] = is_qpure_m2(form)
            return out
        if phi.n == 3:
            return _form_dict(classify_E3(phi, cfg))
        return {"error": f"no classification for maps on M_{phi.n}"}
    except ClassificationError as exc:
        return {"error": str(exc), "error_type": type(exc).__name__}


def cmd_analyze(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    phi, label = _load_map(inputs["map"], "map")
    cp = is_completely_positive(phi, cfg)
    neg = negative_eigenvalues(phi, cfg)
    return label, {
        "n": phi.n,
        "rank": phi.rank(cfg.rank_tol),
        "unital": phi.is_unital(cfg.rank_tol),
        "cp": {"ok": cp.ok, "min_eig": cp.min_eig, "note": cp.note},
        "eigencheck": {"no_negative": bool(neg.size == 0), "negative_eigenvalues": sorted(neg.tolist())},
        "q_positivity": _verdict_dict(certify_q_positive(phi, cfg)),
    }


def cmd_classify(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    phi, label = _load_map(inputs["map"], "map")
    return label, {"n": phi.n, "rank": phi.rank(cfg.rank_tol), "classification": _classification(phi, cfg)}


def cmd_limit(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    phi, label = _load_map(inputs["map"], "map")
    rep = limit_map(phi, cfg)
    return label, {
        "limit": {
            "method": rep.method,
            "crosscheck_error": rep.crosscheck_error,
            "norm_proxy": rep.norm_proxy,
            "rank": rep.limit.rank(cfg.rank_tol),
            "property_residuals": rep.property_residuals,
            "action": rep.limit.action,
        }
    }


def cmd_dominates(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    phi, l1 = _load_map(inputs["phi"], "phi")
    psi, l2 = _load_map(inputs["psi"], "psi")
    return f"{l1} vs {l2}", {"dominance": _verdict_dict(q_dominates(phi, psi, cfg))}


def _corner_problem(inputs: dict) -> tuple[CornerProblem, str]:
    if "flip" in inputs:
        spec = inputs["flip"]
        phi, label = _load_map(spec["phi"], "flip.phi")
        U = decode_matrix(spec["unitary"], "flip.unitary", (phi.n, phi.n))
        return flip_corner(phi, U), f"flip corner of {label}"
    if "block" in inputs:
        theta, label = _load_map(inputs["block"], "block")
        split = inputs.get("split")
        if not isinstance(split, int) or not 0 < split < theta.n:
            raise SchemaError("split", "expected an integer between 1 and the block size - 1")
        return CornerProblem.from_block_map(theta, split), label
    phi, l1 = _load_map(inputs["phi"], "phi")
    gamma, lg = _load_map(inputs["gamma"], "gamma")
    psi, l2 = _load_map(inputs["psi"], "psi")
    return CornerProblem.build(phi, gamma, psi), lg or f"corner {l1} -> {l2}"


def cmd_corner(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    p, label = _corner_problem(inputs)
    cp = corner_cp(p, cfg)
    out = {"n": p.n, "k": p.k, "corner": {"ok": cp.ok, "min_eig": cp.min_eig}}
    qv = is_q_corner(p, cfg)
    out["q_corner"] = _verdict_dict(qv)
    if qv.refuted:
        return label, out
    sigma = limit_corner(p, cfg)
    out["limit_corner"] = {"idempotency": rectangular_idempotency(sigma), "norm": sigma.norm()}
    w = hypermax_refutation_search(p, cfg)
    out["hypermax_witness"] = None if w is None else {
        "compression": w.label,
        "dominance": w.dominance.tag,
        "q_positivity": w.q_positivity.tag,
        "inequality_evidence": w.inequality_evidence,
        "corner_defect": w.corner_defect,
        "valid": w.is_valid(),
    }
    if p.phi.rank(cfg.rank_tol) == 1 and p.phi.is_unital(cfg.rank_tol):
        D = state_density(p.phi)
        if np.linalg.eigvalsh((D + D.conj().T) / 2)[0] > cfg.rank_tol:
            ob = rank_obstruction(D, sigma, cfg)
            out["rank_obstruction"] = None if ob is None else {
                "step": ob.step, "value": ob.value, "index": list(ob.index),
            }
    return label, out


def cmd_witness(inputs: dict, cfg: ToleranceConfig) -> tuple[str, dict]:
    phi, label = _load_map(inputs["map"], "map")
    out: dict = {"n": phi.n}
    if phi.n == 2:
        try:
            form = classify_unital_qpos_m2(phi, cfg)
        except ClassificationError as exc:
            return label, {"n": 2, "witness": None, "error": str(exc)}
        out["family"] = form.family
        if form.family != "M2_rank2":
            out["witness"] = None
            out["q_pure"] = is_qpure_m2(form)
            return label, out
        lam, lam_p, X = canonical_rank2_params(phi, cfg)
        Phi = conjugate_map(rank2_witness(lam, lam_p), X)
        dom = q_dominates(phi, Phi, cfg)
        out["witness"] = {
            "kind": "rank_one_subordinate",
            "lambda": lam,
            "lambda_prime": lam_p,
            "rank": Phi.rank(cfg.rank_tol),
            "dominance": dom.tag,
            "map": Phi.action,
        }
        return label, out
    w = annihilator_compression_witness(phi, cfg)
    out["witness"] = None if w is None else {
        "kind": "annihilator_compression",
        "projection": w.projection,
        "q_positivity": w.q_positivity.tag,
        "dominance": w.dominance.tag,
        "min_distance": w.min_distance,
        "compression_gap": w.compression_gap,
        "passes": w.passes,
    }
    return label, out


COMMANDS = {
    "analyze": cmd_analyze,
    "classify": cmd_classify,
    "limit": cmd_limit,
    "dominates": cmd_dominates,
    "corner": cmd_corner,
    "witness": cmd_witness,
}


def run_verb(verb: str, inputs: dict, cfg: ToleranceConfig, seed: int | None = None) -> AnalysisReport:
    label, verdicts = COMMANDS[verb](inputs, cfg)
    return AnalysisReport(label, verdicts, cfg.to_dict(), __version__, seed)


# ---------------------------------------------------------------- argv handling


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(what, f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(what, f"invalid JSON in {path}: {exc}") from exc


def _config(args) -> ToleranceConfig:
    base = ToleranceConfig()
    if args.config:
        data = _read_json(args.config, "--config")
        if not isinstance(data, dict):
            raise SchemaError("--config", "expected an object")
        try:
            base = base.with_overrides(**data)
        except TypeError as exc:
            raise SchemaError("--config", str(exc)) from exc
    return base.with_overrides(eig_floor=args.tol, grid_points=args.grid, refine_depth=args.refine, t_cap=args.t_cap)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="relative eigenvalue floor")
    common.add_argument("--grid", type=int, help="number of t samples")
    common.add_argument("--refine", type=int, help="refinement rounds around minima")
    common.add_argument("--t-cap", dest="t_cap", type=float, help="largest sampled t")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, help="seed for generated maps (default: $QMAP_SEED or 0)")
    common.add_argument("--config", help="JSON file with tolerance settings")

    parser = argparse.ArgumentParser(prog="qmap", description="Analyze linear maps on matrix algebras.")
    parser.add_argument("--version", action="version", version=f"qmap {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("analyze", "classify", "limit", "witness"):
        sp = sub.add_parser(verb, parents=[common])
        sp.add_argument("map", help="map description (JSON)")
    sp = sub.add_parser("dominates", parents=[common], help="test phi >=_q psi")
    sp.add_argument("phi")
    sp.add_argument("psi")
    sp = sub.add_parser("corner", parents=[common], help="corner between two maps")
    sp.add_argument("maps", nargs="*", help="phi gamma psi, or a single block map with --split")
    sp.add_argument("--flip", help="map phi for the flip corner gamma(A) = phi(A U^*) U")
    sp.add_argument("--unitary", help="JSON file holding the unitary U as a matrix")
    sp.add_argument("--split", type=int, help="size of the upper-left block")
    sp = sub.add_parser("corpus", parents=[common], help="regression corpus")
    sp.add_argument("action", choices=("verify",))
    sp.add_argument("paths", nargs="*", help="extra corpus files or directories")
    return parser


def _inputs(args) -> dict:
    if args.verb in ("analyze", "classify", "limit", "witness"):
        return {"map": _read_json(args.map, "map")}
    if args.verb == "dominates":
        return {"phi": _read_json(args.phi, "phi"), "psi": _read_json(args.psi, "psi")}
    if args.flip:
        if not args.unitary:
            raise SchemaError("--unitary", "required with --flip")
        U = _read_json(args.unitary, "unitary")
        if isinstance(U, dict):
            U = U.get("unitary")
        return {"flip": {"phi": _read_json(args.flip, "flip"), "unitary": U}}
    if len(args.maps) == 1:
        return {"block": _read_json(args.maps[0], "block"), "split": args.split}
    if len(args.maps) == 3:
        names = ("phi", "gamma", "psi")
        return {k: _read_json(p, k) for k, p in zip(names, args.maps)}
    raise SchemaError("corner", "give phi gamma psi, a block map with --split, or --flip with --unitary")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    try:
        return int(os.environ.get("QMAP_SEED", "0"))
    except ValueError:
        raise SchemaError("QMAP_SEED", "expected an integer") from None


def run_command(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = _config(args)
        seed = _seed(args)
        if args.verb == "corpus":
            from .corpus import verify_corpus

            ok = verify_corpus(args.paths, cfg, seed, out)
            return 0 if ok else 1
        report = run_verb(args.verb, _inputs(args), cfg, seed)
        out.write(emit_report(report, args.format).decode())
        return 0
    except SchemaError as exc:
        err.write(f"qmap: schema error: {exc}\n")
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        err.write(f"qmap: usage error: {exc}\n")
        return 1
    except (QMapError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err.write(f"qmap: numeric failure: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_command())
