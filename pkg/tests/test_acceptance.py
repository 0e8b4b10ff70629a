"""Acceptance battery: one test per criterion, each recording a PASS/FAIL line.

The lines are echoed at the end of the pytest run (see ``conftest.py``).
Tolerances and runtime limits are the stated ones; nothing is relaxed to
make a criterion pass.
"""
import math
import time
from fractions import Fraction

import numpy as np

import oracles
from polyrenorm.core import Functional, PolyrenormError, SparseVector, evaluate, head, tail
from polyrenorm.partition import (assign_partition, derived_b_sequence, leung_chain_check, orlicz_b_sequence,
                                  tail_decay, tail_index)
from polyrenorm.pipeline import ExperimentConfig, limit_section, default_annotations, run
from polyrenorm.polytope import SectionSpec, certify_polyhedral_section, certify_sandwich, section_ball
from polyrenorm.renorm import (boundary_enumerate, compute_params, hk_boundary_system,
                               system_for, triple_norm)
from polyrenorm.report import dumps
from polyrenorm.sampling import section_directions, sphere_samples
from polyrenorm.spaces import SpaceDescriptor
from polyrenorm.spaces.hereditary import (HereditaryFamily, extreme_signed_indicators, schreier_family,
                                          singletons_family)
from polyrenorm.spaces.nakano import NakanoDescriptor, nakano_modular
from polyrenorm.spaces.orlicz import OrliczDescriptor, OrliczFunction, orlicz_dn, orlicz_limit_check
from polyrenorm.star import (assign_psi, build_nets, declared_limits, disjointify, epsilon_schedule_exact,
                             hk_cardinality_decomposition, limit_defect_check, membership_index, net_covering_report,
                             psi_cell, star_norm)

from conftest import CONFIGS, record

SEED = 42
SCHREIER = SpaceDescriptor.hk(schreier_family(6))
NAKANO = SpaceDescriptor.nakano([[1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6]], [1, 1.5, 2, 2.5, 3, 4])
PATCHED = SpaceDescriptor.orlicz(OrliczFunction("patched_exponential"), 2.0, 8)


def rng(offset=0):
    return np.random.default_rng(SEED + offset)


def random_nakano_instance(g):
    w, N = int(g.integers(1, 7)), int(g.integers(1, 5))
    fams = [set(int(k) for k in np.flatnonzero(g.random(w) < 0.5) + 1) for _ in range(N)]
    for k in range(1, w + 1):
        if not any(k in f for f in fams):
            fams[int(g.integers(N))].add(k)
    fams = [f or {int(g.integers(1, w + 1))} for f in fams]
    p = sorted(float(v) for v in g.uniform(1, 4, N))
    scale = g.choice([0.3, 1.0, 3.0])
    x = {k: float(v) * scale for k, v in zip(range(1, w + 1), g.normal(size=w)) if g.random() < 0.8}
    return fams, p, x


def test_criterion_01_modular_oracle():
    g = rng(1)
    inst = [random_nakano_instance(g) for _ in range(500)]
    t0 = time.perf_counter()
    ours = [nakano_modular(NakanoDescriptor(tuple(f), tuple(p)), SparseVector(x)) for f, p, x in inst]
    elapsed = time.perf_counter() - t0
    ref = [oracles.nakano_modular(f, p, x) for f, p, x in inst]
    err = max(abs(a - b) / max(1.0, b) for a, b in zip(ours, ref))
    record(1, err <= 1e-12 and elapsed < 5.0,
           f"500 instances, max rel err {err:.2e} (tol 1e-12), {elapsed:.2f}s (limit 5s)")


def test_criterion_02_luxemburg_closed_forms():
    t0 = time.perf_counter()
    l2n = SpaceDescriptor.nakano([[1, 2]], [2.0])
    l2o = SpaceDescriptor.orlicz(OrliczFunction("power", 2.0), 2.0, 2)
    x34 = SparseVector({1: 3.0, 2: 4.0})
    closed = max(abs(l2n.norm(x34) - 5.0), abs(l2o.norm(x34) - 5.0))
    g = rng(2)
    worst_h = worst_t = -math.inf
    for sp in (NAKANO, PATCHED):
        d = sp.truncation_dim
        for _ in range(1000):
            x = SparseVector(enumerate(g.normal(size=d) * g.choice([0.1, 1, 10]), start=1))
            y = SparseVector(enumerate(g.normal(size=d) * g.choice([0.1, 1, 10]), start=1))
            lam = float(g.uniform(-5, 5))
            nx = sp.norm(x)
            worst_h = max(worst_h, abs(sp.norm(x * lam) - abs(lam) * nx) / max(1.0, abs(lam) * nx))
            worst_t = max(worst_t, (sp.norm(x + y) - nx - sp.norm(y)) / max(1.0, nx))
    elapsed = time.perf_counter() - t0
    ok = closed <= 1e-9 and worst_h <= 1e-9 and worst_t <= 1e-9 and elapsed < 5.0
    record(2, ok, f"|(3,4)|-5 = {closed:.1e}; homogeneity {worst_h:.1e}, triangle excess {worst_t:.1e} "
                  f"(tol 1e-9); {elapsed:.2f}s (limit 5s)")


def _claims(space, samples, b):
    sys, p = system_for(space), compute_params(b)
    worst_strict = worst_upper = worst_attain = math.inf
    for x in samples:
        r = triple_norm(sys, p, x)
        nx, N = space.norm(x), r.terminating_index
        worst_strict = min(worst_strict, (r.value - nx) - (2.0 ** -N * nx / p.a_at(N) - 1e-8))
        worst_upper = min(worst_upper, p.a_at(1) * nx - r.value)
        # the witness a_n g with g in G_n attains the value
        dev = abs(evaluate(r.witness, x) - r.value)
        dev = max(dev, abs(p.a_at(r.n_x) * abs(evaluate(r.base_witness, x)) - r.value))
        if space.kind == "hk":
            piece = sys.pieces[r.n_x - 1].functionals
            assert r.base_witness in piece or Functional(-r.base_witness) in piece
        else:
            assert max(r.base_witness.support()) <= r.n_x
            dev = max(dev, abs(abs(evaluate(r.base_witness, x)) - space.norm(head(x, r.n_x))))
        worst_attain = min(worst_attain, 1e-9 - dev)
    return worst_strict, worst_upper, worst_attain


def test_criterion_03_renorm_claims():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for name, sp, off in (("schreier", SCHREIER, 3), ("nakano", NAKANO, 4)):
        samples = sphere_samples(sp, 1000, rng(off))
        s, u, a = _claims(sp, samples, derived_b_sequence(sp, 0.5))
        ok &= s >= 0 and u >= -1e-8 and a >= 0
        parts.append(f"{name}: strict margin {s:.2e}, upper {u:.2e}, attain {a:.1e}")
    elapsed = time.perf_counter() - t0
    record(3, ok and elapsed < 30.0, "; ".join(parts) + f"; {elapsed:.2f}s (limit 30s)")


def test_criterion_04_lower_bound():
    parts, ok = [], True
    for name, sp, off in (("schreier", SCHREIER, 3), ("nakano", NAKANO, 4)):
        samples = sphere_samples(sp, 1000, rng(off))
        b = derived_b_sequence(sp, 0.5)
        sys, p = system_for(sp), compute_params(b)
        labels = assign_partition(sp, samples, "tail", 0.5).labels
        for n in range(1, len(b) + 1):
            assert abs(p.a_at(n) * p.c_at(n) - (1 + 2.0 ** -n)) <= 1e-15
        worst = min(triple_norm(sys, p, x).value - (1 + 2.0 ** -n) * sp.norm(x) for x, n in zip(samples, labels))
        ok &= worst >= -1e-8
        parts.append(f"{name}: worst excess {worst:.2e}")
    record(4, ok, "; ".join(parts) + " (tol 1e-8)")


def test_criterion_05_nakano_bound_chain():
    t0 = time.perf_counter()
    desc, q = NAKANO.payload, 0.5
    worst_tail = worst_head = math.inf
    for x in sphere_samples(NAKANO, 1000, rng(5)):
        m = tail_index(NAKANO, x, q)
        qb = tail_decay(desc, m, q)
        worst_tail = min(worst_tail, qb - nakano_modular(desc, tail(x, m)))
        worst_head = min(worst_head, NAKANO.norm(head(x, m)) - (1 - qb))
    elapsed = time.perf_counter() - t0
    ok = worst_tail >= -1e-8 and worst_head >= -1e-8 and elapsed < 10.0
    record(5, ok, f"tail margin {worst_tail:.2e}, head margin {worst_head:.2e} (tol 1e-8); "
                  f"{elapsed:.2f}s (limit 10s)")


def grid_dn(n, K=2.0, points=10_000):
    """``min M(Kt)/M(t)`` over a geometric grid on ``(0, M^{-1}(1/n)]`` including the endpoint."""
    tn = oracles.patched_exp_inverse(1.0 / n)
    ts = np.geomspace(tn * 1e-3, tn, points)
    return math.exp(min(oracles.log_patched_ratio(float(t), K) for t in ts))


def test_criterion_06_orlicz_dn_law():
    parts, ok = [], True
    for n in (4, 100, 10_000):
        d = orlicz_dn(PATCHED.payload, n).d_n
        ref = grid_dn(n)
        target = n ** 0.5
        rel = abs(d - target) / target
        agree = abs(d - ref) / ref
        ok &= rel <= 0.01 and agree <= 1e-6
        parts.append(f"n={n}: d_n={d:.6g} vs n^(1/2)={target:g} ({100 * rel:.2f}%), grid {ref:.6g}")
    held, ratio = orlicz_limit_check(OrliczDescriptor(OrliczFunction("power", 2.0), 2.0), 0.5 / np.arange(1, 200))
    ok &= (not held) and abs(ratio - 4.0) <= 1e-12
    parts.append(f"t^2 ratio {ratio!r}, hypothesis {'holds' if held else 'fails'}")
    record(6, ok, "; ".join(parts))


def test_criterion_07_leung_contradiction():
    samples = sphere_samples(PATCHED, 500, rng(7))
    desc = PATCHED.payload
    dn = [orlicz_dn(desc, n) for n in range(1, PATCHED.truncation_dim + 1)]
    b = orlicz_b_sequence(desc, PATCHED.truncation_dim)
    assert [g.b_n for g in dn] == b
    survivors, failed_links = 0, {}
    for x in samples:
        for g in dn:
            rep = leung_chain_check(desc, x, g.n, g.b_n, g.d_n)
            if rep.all_hold:
                survivors += 1
            for name in rep.failed:
                failed_links[name] = failed_links.get(name, 0) + 1
    record(7, survivors == 0, f"500 samples x {len(dn)} indices, full chains holding: {survivors}; "
                              f"failed links {dict(sorted(failed_links.items()))}")


def test_criterion_08_psi_eps_battery():
    t0 = time.perf_counter()
    eps = 0.1
    base = hk_cardinality_decomposition(SCHREIER.payload)
    decomp = base.annotate(default_annotations(base))
    psi_ok = all(Fraction(assign_psi(decomp, eps, f).psi) == Fraction(float(oracles.psi(eps, *membership_index(decomp, f))))
                 for _, f in decomp.members())
    assert abs(assign_psi(disjointify([[Functional.basis(1)]]), 0.1, Functional.basis(1)).psi - 1.0625) == 0
    eps_ok = all(epsilon_schedule_exact(eps, n) == Fraction(eps) * Fraction(1, 4 ** n) / 160 for n in range(12))
    nets = build_nets(decomp, eps, SCHREIER.dual_norm, SCHREIER.dual_bounds)
    cover = net_covering_report(nets, decomp, SCHREIER.dual_norm)
    cover_ok = all(r["covered"] and r["psi_gap"] <= r["eps_n"] and r["distance"] <= r["eps_n"] for r in cover)
    sep = math.inf
    for n, net in enumerate(nets.nets):
        cells = {}
        for f in net:
            cells.setdefault(psi_cell(eps, *membership_index(decomp, f), n), []).append(f)
        for cell in cells.values():
            for i in range(len(cell)):
                for j in range(i + 1, len(cell)):
                    lo, _ = SCHREIER.dual_bounds(cell[i] - cell[j])
                    dist = lo if lo >= nets.eps[n] else SCHREIER.dual_norm(cell[i] - cell[j])
                    sep = min(sep, dist - nets.eps[n])
    elapsed = time.perf_counter() - t0
    ok = psi_ok and eps_ok and cover_ok and sep >= 0 and elapsed < 5.0
    record(8, ok, f"psi exact {psi_ok}, eps_n exact {eps_ok}, {len(cover)} members covered {cover_ok}, "
                  f"separation margin >= {sep:.3g}; {elapsed:.2f}s (limit 5s)")


def test_criterion_09_star_sandwich():
    eps = 0.1
    decomp = hk_cardinality_decomposition(SCHREIER.payload)
    nets = build_nets(decomp, eps, SCHREIER.dual_norm, SCHREIER.dual_bounds)
    lo = hi = math.inf
    for x in sphere_samples(SCHREIER, 1000, rng(9)):
        v, w = star_norm(nets, decomp, eps, x)
        nx = SCHREIER.norm(x)
        assert abs(evaluate(w, x) - v) <= 1e-12
        lo, hi = min(lo, v - nx), min(hi, (1 + eps) * nx - v)
    record(9, lo > -1e-8 and lo > 0 and hi >= -1e-8,
           f"min(|||x||| - ||x||) = {lo:.3e}, min((1+eps)||x|| - |||x|||) = {hi:.3e} (tol 1e-8)")


def test_criterion_10_limit_defect():
    eps = 0.1
    worst, count, ok = math.inf, 0, True
    base = hk_cardinality_decomposition(SCHREIER.payload)
    extra = {Functional({2: -1.0, 3: -1.0}): {0}, Functional({3: 1.0, 4: 1.0, 5: 1.0}): {1}}
    cases = [(base.annotate(default_annotations(base)).annotate(extra), 6)]
    two = disjointify([[Functional.basis(1), Functional({1: -1.0})], [Functional.basis(2), Functional({2: -1.0})]])
    cases.append((two.annotate({Functional.basis(2): {0}}), 2))
    for decomp, dim in cases:
        nets = build_nets(decomp, eps,
                          SCHREIER.dual_norm if dim == 6 else SpaceDescriptor.hk(singletons_family(2)).dual_norm)
        lims = declared_limits(decomp, eps)
        assert lims
        for lim in lims:
            assert 1 < lim.alpha < 1 + eps
            r = limit_defect_check(nets, decomp, eps, lim.f, lim.alpha, limit_section(lim.f, dim))
            ok &= r.measured <= r.threshold + 1e-8
            worst = min(worst, r.threshold - r.measured)
            count += 1
    record(10, ok, f"{count} declared limits over 2-dim sections, worst (1 - eps_n) - measured = {worst:.3e}")


def test_criterion_11_polytope_certification():
    t0 = time.perf_counter()
    F = extreme_signed_indicators(SCHREIER.payload)
    g = rng(11)
    reps = {}
    for ks in ((1, 2), (2, 3)):
        sec = SectionSpec.coordinates(*ks)
        reps[ks] = certify_polyhedral_section(F, sec, section_directions(2, 100, g), norm=SCHREIER.norm)
    vdev = 0.0
    sys, p = hk_boundary_system(SCHREIER), compute_params(derived_b_sequence(SCHREIER, 0.5))
    Ft = boundary_enumerate(sys, p, 6)
    for ks in ((1, 2), (2, 3)):
        sec = SectionSpec.coordinates(*ks)
        for v in section_ball(F, sec).vertex_points():
            vdev = max(vdev, abs(SCHREIER.norm(v) - 1))
        for v in section_ball(Ft, sec).vertex_points():
            vdev = max(vdev, abs(triple_norm(sys, p, v).value - 1))
    sand = certify_sandwich(SCHREIER.norm, section_ball(F, SectionSpec.coordinates(2, 3)), 0.0, SCHREIER.dual_norm)
    elapsed = time.perf_counter() - t0
    v12, v23 = reps[(1, 2)], reps[(2, 3)]
    ok12 = v12.vertex_count == 4 and sorted(v12.vertices) == [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
    ok23 = v23.vertex_count == 8
    ok = ok12 and ok23 and vdev <= 1e-7 and sand.passed and v12.passed and v23.passed and elapsed < 5.0
    record(11, ok, f"(e1,e2): {v12.vertex_count} vertices {'ok' if ok12 else 'WRONG'}; "
                   f"(e2,e3): {v23.vertex_count} vertices (expected 8) {list(v23.vertices)}; "
                   f"max vertex norm deviation {vdev:.1e}; sandwich eta=0 {sand.passed}; {elapsed:.2f}s (limit 5s)")


def _failure_details(name):
    rep = run(ExperimentConfig.load(CONFIGS / name, mode="pipeline"))
    return [c.detail for c in rep.checks if not c.passed]


def test_criterion_12_negative_fixtures():
    found = {}
    for name, needle in (("hilbert_b1_zero.json", "b must be strictly positive"),
                         ("constant_b.json", "b sequence does not converge to 1")):
        found[name] = any(needle in d for d in _failure_details(name))
    try:
        HereditaryFamily.from_sets(3, [{1}, {2}, {3}, {1, 2, 3}])
        found["non-hereditary"] = False
    except PolyrenormError as exc:
        found["non-hereditary"] = "not hereditary" in str(exc)
    record(12, all(found.values()), ", ".join(f"{k}: {'rejected' if v else 'NOT rejected'}" for k, v in found.items()))


def test_criterion_13_determinism(tmp_path):
    texts = {}
    for name in ("schreier.json", "nakano.json", "orlicz.json"):
        runs = []
        for _ in range(2):
            rep = run(ExperimentConfig.load(CONFIGS / name, mode="verify", seed=SEED))
            rep.timestamp = "<stamp>"
            runs.append(dumps(rep).encode())
        texts[name] = runs[0] == runs[1] and rep.passed
    record(13, all(texts.values()), ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in texts.items()))
