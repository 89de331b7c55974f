"""The twelve acceptance criteria, each reported as one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from oracles import brute_force_cp
from qmap.classify import (
    E2_FAMILIES,
    E3_FAMILIES,
    canonical_rank2_params,
    classify_E2,
    classify_E3,
    classify_unital_qpos_m2,
    random_idempotent_ucp,
    random_unital_qpos_m2,
    random_unital_qpos_m2_with_params,
    reconstruct,
)
from qmap.config import DEFAULT
from qmap.corners import (
    schur_corner_problem,
    flip_corner,
    hypermax_refutation_search,
    is_corner,
    is_q_corner,
    rank_obstruction,
)
from qmap.corpus import corpus_maps
from qmap.errors import RankThreeError
from qmap.forms import e3_form, phi_r_family, phi_r_threshold, rank2_witness, rank3_unital_map, sign_flip_map
from qmap.limits import (
    annihilator_compression_witness,
    is_idempotent_ucp,
    limit_map,
    q_dominates,
    verify_limit_properties,
)
from qmap.resolvent import certify_q_positive, q_threshold, spectrum
from qmap.superop import RectangularMap, conjugate_map, haar_unitary, is_completely_positive

pytestmark = pytest.mark.acceptance

LIMIT_PROPERTIES = ("idempotency", "left_intertwining", "right_intertwining", "range", "nullspace", "cp")


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_phi_r_threshold(report):
    start = time.perf_counter()
    errors = {}
    for r in (1.05, 1.1, 1.2, 1.3, 1.4):
        errors[r] = abs(q_threshold(phi_r_family(r)) - phi_r_threshold(r))
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    report(1, worst <= 1e-6 and elapsed < 5.0,
           f"phi_r thresholds, max error {worst:.2e} (tol 1e-6), {elapsed:.2f} s (limit 5 s)")


def test_criterion_02_negative_eigenvalue(report):
    phi = sign_flip_map()
    cp = is_completely_positive(phi).ok
    dist = float(np.min(np.abs(spectrum(phi) - (-1.0))))
    report(2, cp and dist <= 1e-10, f"sign-flip Schur map CP={cp}, distance of -1 to spectrum {dist:.1e}")


def test_criterion_03_rank_three_exclusion(report):
    phi = rank3_unital_map()
    cp = is_completely_positive(phi).ok
    rank = phi.rank()
    v = certify_q_positive(phi)
    finite = v.refuted and v.witness_t is not None and math.isfinite(v.witness_t)
    try:
        classify_unital_qpos_m2(phi)
        raised = False
    except RankThreeError:
        raised = True
    report(3, cp and rank == 3 and finite and raised,
           f"rank-3 map CP={cp}, rank={rank}, refuted at t={v.witness_t}, rank-3 diagnostic={raised}")


def test_criterion_04_limit_properties(report):
    start = time.perf_counter()
    maps = [random_unital_qpos_m2(seed) for seed in range(100)]
    maps += [e3_form(f, 0.3) for f in E3_FAMILIES if f != "E3_state"]
    maps += [reconstruct("E3_state", {"weights": [0.2, 0.3, 0.5]})]
    worst = 0.0
    for phi in maps:
        res = verify_limit_properties(phi, limit_map(phi).limit)
        worst = max(worst, max(res[k] for k in LIMIT_PROPERTIES))
    elapsed = time.perf_counter() - start
    report(4, worst <= 1e-8 and elapsed < 30.0,
           f"{len(maps)} maps, worst limit-property residual {worst:.2e} (tol 1e-8), {elapsed:.2f} s (limit 30 s)")


def test_criterion_05_conjugation_equivariance(report):
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        if seed % 2 == 0:
            phi, n = random_unital_qpos_m2(seed), 2
        else:
            family = E3_FAMILIES[seed % len(E3_FAMILIES)]
            phi, _, _ = random_idempotent_ucp(3, family, rng)
            n = 3
        U = haar_unitary(n, rng)
        lhs = limit_map(conjugate_map(phi, U)).limit
        rhs = conjugate_map(limit_map(phi).limit, U)
        worst = max(worst, lhs.distance(rhs))
    report(5, worst <= 1e-8, f"50 seeded pairs, worst |L(phi_U) - (L phi)_U| = {worst:.2e} (tol 1e-8)")


def _e2_draw(family, rng):
    if family == "E2_state":
        return random_idempotent_ucp(2, family, rng)[:2]
    return conjugate_map(reconstruct(family, {}), haar_unitary(2, rng)), {}


def test_criterion_06_generate_and_recover(report):
    rng = np.random.default_rng(6)
    tags = bad_params = 0
    worst_conj = worst_param = 0.0
    total = 0
    for family in E2_FAMILIES + E3_FAMILIES:
        for _ in range(200):
            if family in E2_FAMILIES:
                Phi, params = _e2_draw(family, rng)
                form = classify_E2(Phi)
            else:
                Phi, params, _ = random_idempotent_ucp(3, family, rng)
                form = classify_E3(Phi)
            total += 1
            tags += form.family == family
            for key, value in params.items():
                err = float(np.max(np.abs(np.asarray(form.params[key]) - np.asarray(value))))
                worst_param = max(worst_param, err)
                bad_params += err > 1e-6
            worst_conj = max(worst_conj, conjugate_map(form.canonical_map(), form.conjugator).distance(Phi))
    report(6, tags == total and bad_params == 0 and worst_conj <= 1e-8,
           f"{tags}/{total} family tags, worst parameter error {worst_param:.1e}, "
           f"worst conjugator round trip {worst_conj:.1e}")


def test_criterion_07_rank_law(report):
    allowed = {1, 2, 3, 4, 5, 9}
    rng = np.random.default_rng(7)
    maps = [phi for _, phi in corpus_maps() if phi.n == 3 and is_idempotent_ucp(phi)]
    from_corpus = len(maps)
    for family in E3_FAMILIES:
        maps += [random_idempotent_ucp(3, family, rng)[0] for _ in range(10)]
    ranks = sorted({phi.rank() for phi in maps})
    report(7, set(ranks) <= allowed,
           f"{len(maps)} idempotent UCP maps on M3 ({from_corpus} from the corpus), ranks seen {ranks}")


def test_criterion_08_rank2_qpurity_refutation(report):
    ok = 0
    for seed in range(20):
        phi, _, _, _ = random_unital_qpos_m2_with_params(seed, "M2_rank2")
        lam, lam_p, X = canonical_rank2_params(phi)
        Phi = conjugate_map(rank2_witness(lam, lam_p), X)
        dom = q_dominates(phi, Phi)
        ok += dom.tag == "certified_sampled" and Phi.rank() == 1
    report(8, ok == 20, f"{ok}/20 rank-2 maps dominate a rank-one witness on the full grid")


def test_criterion_09_annihilator_refutation(report):
    results = []
    for family in ("E3_I", "E3_II", "E3_III"):
        for lam in (0.25, 0.5, 0.75):
            w = annihilator_compression_witness(e3_form(family, lam))
            results.append(w is not None and w.passes)
    report(9, all(results), f"{sum(results)}/9 forms I-III generators give a passing compression witness")


def test_criterion_10_flip_corners(report):
    ok = 0
    for seed in range(20):
        rng = np.random.default_rng(500 + seed)
        p = flip_corner(random_unital_qpos_m2(seed), haar_unitary(2, rng))
        ok += (is_corner(p) and is_q_corner(p).tag == "certified_sampled"
               and hypermax_refutation_search(p) is None)
    report(10, ok == 20, f"{ok}/20 flip corners are q-corners with no compression witness")


def test_criterion_11_schur_corner_witness(report):
    w = hypermax_refutation_search(schur_corner_problem())
    found = w is not None and w.is_valid() and w.label == "e11+e33+e44"
    density = np.diag([0.4, 0.6])
    negatives = []
    for sigma in (RectangularMap.from_function(lambda B: B, (2, 2)),
                  RectangularMap.from_function(lambda B: B[0, 0] * np.eye(2), (2, 2))):
        ob = rank_obstruction(density, sigma)
        direct = float(np.real(ob.vector.conj() @ ob.matrix @ ob.vector))
        negatives.append(bool(ob.value < 0 and direct < 0 and np.linalg.eigvalsh(ob.matrix)[0] < 0))
    report(11, found and all(negatives),
           f"witness {w.label if w else None} valid={bool(w and w.is_valid())}, "
           f"faithful-state obstructions negative: {negatives}")


def test_criterion_12_oracle_equivalence(report):
    rng = np.random.default_rng(12)
    maps = corpus_maps()
    disagreements = []
    for name, phi in maps:
        if is_completely_positive(phi).ok != brute_force_cp(phi, probes=500, eig_floor=DEFAULT.eig_floor, rng=rng):
            disagreements.append(name)
    report(12, not disagreements,
           f"{len(maps)} corpus maps x 500 probes, {len(disagreements)} disagreements {disagreements or ''}")
