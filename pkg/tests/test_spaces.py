import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from polyrenorm.core import Functional, PolyrenormError, SparseVector, evaluate
from polyrenorm.spaces import SpaceDescriptor, luxemburg_norm, piece_sup
from polyrenorm.spaces.hereditary import (HereditaryFamily, hk_dual_norm, hk_norm, hk_to_ck, isolates,
                                          schreier_family, strata)
from polyrenorm.spaces.nakano import NakanoDescriptor, nakano_modular, nakano_modular_bruteforce
from polyrenorm.spaces.orlicz import (OrliczDescriptor, OrliczFunction, orlicz_dn, orlicz_limit_check,
                                      validate_orlicz_function)

NAKANO = SpaceDescriptor.nakano([[1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6]], [1, 1.5, 2, 2.5, 3, 4])
SCHREIER = SpaceDescriptor.hk(schreier_family(6))
PATCHED = SpaceDescriptor.orlicz(OrliczFunction("patched_exponential"), 2.0, 8)

vec6 = st.dictionaries(st.integers(1, 6), st.floats(-5, 5, allow_nan=False, allow_infinity=False),
                       min_size=1, max_size=6).filter(lambda d: any(abs(v) > 1e-3 for v in d.values()))


# nakano -------------------------------------------------------------------


def test_nakano_descriptor_validation():
    with pytest.raises(PolyrenormError, match="nondecreasing"):
        NakanoDescriptor(({1}, {2}), (2.0, 1.0))
    with pytest.raises(PolyrenormError, match="uncovered"):
        NakanoDescriptor(({1}, {3}), (1.0, 2.0))


def test_nakano_example_value():
    desc = NakanoDescriptor(({1, 2}, {2, 3}), (1.0, 2.0))
    x = SparseVector({1: 0.5, 2: 2.0, 3: 0.5})
    # coordinate 2 exceeds 1, so it takes the larger exponent; the others the smaller
    assert nakano_modular(desc, x) == 0.5 + 4.0 + 0.25
    assert nakano_modular(desc, x) == oracles.nakano_modular([{1, 2}, {2, 3}], [1.0, 2.0], x.entries)


@settings(max_examples=100)
@given(vec6)
def test_nakano_greedy_matches_oracle(d):
    x = SparseVector(d)
    fams = [set(a) for a in NAKANO.payload.families]
    ref = oracles.nakano_modular(fams, NAKANO.payload.exponents, x.entries)
    assert abs(nakano_modular(NAKANO.payload, x) - ref) <= 1e-12 * max(1, ref)
    assert abs(nakano_modular_bruteforce(NAKANO.payload, x) - ref) <= 1e-12 * max(1, ref)


def test_l2_closed_form():
    l2 = SpaceDescriptor.nakano([[1, 2]], [2.0])
    assert abs(l2.norm(SparseVector({1: 3.0, 2: 4.0})) - 5.0) <= 1e-9
    t2 = SpaceDescriptor.orlicz(OrliczFunction("power", 2.0), 2.0, 2)
    assert abs(t2.norm(SparseVector({1: 3.0, 2: 4.0})) - 5.0) <= 1e-9


@settings(max_examples=25)
@given(vec6.filter(lambda d: len(d) <= 4))
def test_nakano_norm_matches_root_finding_oracle(d):
    x = SparseVector(d)
    fams = [set(a) for a in NAKANO.payload.families]
    ref = oracles.luxemburg(lambda y: oracles.nakano_modular(fams, NAKANO.payload.exponents, y), x.entries)
    assert abs(NAKANO.norm(x) - ref) <= 1e-9 * ref


@settings(max_examples=60)
@given(vec6, vec6, st.floats(-4, 4, allow_nan=False).filter(lambda v: abs(v) > 1e-3))
def test_norm_axioms(a, b, lam):
    for sp in (NAKANO, SCHREIER, PATCHED):
        x, y = SparseVector(a), SparseVector(b)
        nx = sp.norm(x)
        assert abs(sp.norm(x * lam) - abs(lam) * nx) <= 1e-9 * max(1, abs(lam) * nx)
        assert sp.norm(x + y) <= nx + sp.norm(y) + 1e-9


def test_luxemburg_rejects_invalid_modular():
    with pytest.raises(PolyrenormError, match="invalid modular"):
        luxemburg_norm(lambda y: 0.5, SparseVector({1: 1.0}))


def test_truncation_window_enforced():
    with pytest.raises(PolyrenormError, match="outside the truncation window"):
        SCHREIER.norm(SparseVector({7: 1.0}))


# norming functionals and duals --------------------------------------------


@settings(max_examples=40, deadline=None)
@given(vec6)
def test_norming_functional_attains(d):
    x = SparseVector(d)
    for sp in (NAKANO, SCHREIER, PATCHED):
        f = sp.norming_functional(x)
        assert abs(evaluate(f, x) - sp.norm(x)) <= 1e-9 * max(1, sp.norm(x))
    f = SCHREIER.norming_functional(x)
    assert SCHREIER.dual_norm(f) <= 1 + 1e-9


def test_modular_dual_norm_of_norming_functional_is_one():
    x = SparseVector({1: 3.0, 2: 4.0})
    l2 = SpaceDescriptor.nakano([[1, 2]], [2.0])
    f = l2.norming_functional(x)
    assert abs(f[1] - 0.6) < 1e-9 and abs(f[2] - 0.8) < 1e-9
    assert abs(l2.dual_norm(f) - 1.0) < 1e-7


@settings(max_examples=40, deadline=None)
@given(vec6)
def test_hk_dual_norm_matches_full_lp(d):
    f = Functional(d)
    sets = oracles.schreier_sets(6)
    assert abs(hk_dual_norm(SCHREIER.payload, f) - oracles.hk_dual_norm(sets, 6, f.entries)) <= 1e-9


# hereditary families ------------------------------------------------------


def test_schreier_matches_definition():
    assert set(schreier_family(7).members) == set(oracles.schreier_sets(7))


def test_schreier_norm_example():
    x = SparseVector({1: 1.0, 2: 1.0, 3: 1.0})
    assert SCHREIER.norm(x) == 2.0
    assert SCHREIER.norming_functional(x) == Functional({2: 1.0, 3: 1.0})


@given(vec6)
def test_hk_norm_matches_oracle(d):
    x = SparseVector(d)
    assert abs(hk_norm(SCHREIER.payload, x) - oracles.hk_norm(oracles.schreier_sets(6), d)) <= 1e-12


def test_non_hereditary_rejected():
    with pytest.raises(PolyrenormError, match="not hereditary"):
        HereditaryFamily.from_sets(3, [{1}, {2}, {3}, {1, 2, 3}])


def test_missing_singleton_rejected():
    with pytest.raises(PolyrenormError, match="singletons"):
        HereditaryFamily.from_sets(3, [{1}, {2}])


def test_downward_closure():
    fam = HereditaryFamily.downward_closure(3, [{1, 2, 3}])
    assert len(fam) == 8


def test_ck_image_is_isometric():
    x = SparseVector({2: 1.0, 3: -2.0})
    img = hk_to_ck(SCHREIER.payload, x)
    assert img.sup == 2.0
    assert img.values[frozenset({2, 3})] == -1.0


def test_strata_isolate_members():
    for s in strata(schreier_family(5)):
        for a in s.members:
            assert isolates(s, a)


# orlicz -------------------------------------------------------------------


def test_orlicz_validation():
    with pytest.raises(PolyrenormError):
        OrliczDescriptor(OrliczFunction("power", 2.0), 1.0)
    validate_orlicz_function(OrliczFunction("patched_exponential"))


def test_patched_exponential_continuity():
    M = OrliczFunction("patched_exponential")
    assert M(0.5) == math.exp(-2)
    assert abs(M(0.5 + 1e-12) - M(0.5)) < 1e-11
    assert abs(M.derivative(0.5) - M.derivative(0.5000001)) < 1e-5


def test_inverse_matches_bisection():
    M = OrliczFunction("patched_exponential")
    for level in (0.01, 0.1, 0.25, 1.0, 3.0):
        assert abs(M(M.inverse(level)) - level) < 1e-12
        assert abs(M.inverse(level) - oracles.patched_exp_inverse(level)) < 1e-12


@pytest.mark.parametrize("n", [1, 4, 100, 10_000])
def test_dn_against_oracle(n):
    g = orlicz_dn(PATCHED.payload, n)
    assert abs(g.d_n - oracles.orlicz_dn(n)) <= 1e-9 * g.d_n
    assert 0 < g.b_n <= (g.d_n - 1) / g.d_n
    if n < 50:
        assert g.b_n < (g.d_n - 1) / g.d_n


def test_dn_value_at_four_is_not_two():
    # M^{-1}(1/4) lies on the affine part, where the ratio is (8t - 1)/(4t - 1)
    g = orlicz_dn(PATCHED.payload, 4)
    t = oracles.patched_exp_inverse(0.25)
    assert abs(g.d_n - (8 * t - 1) / (4 * t - 1)) < 1e-9
    assert abs(g.d_n - 2.54134) < 1e-5


def test_limit_check():
    grid = 0.5 / np.arange(1, 40)
    ok, _ = orlicz_limit_check(PATCHED.payload, grid)
    assert ok
    t2 = OrliczDescriptor(OrliczFunction("power", 2.0), 2.0)
    ok, ratio = orlicz_limit_check(t2, grid)
    assert not ok and abs(ratio - 4.0) <= 1e-12


# piece sups ---------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(vec6, st.integers(1, 6))
def test_support_card_shortcuts_match_exhaustive(d, n):
    import itertools

    x = SparseVector(d)
    for sp in (SCHREIER, PATCHED, NAKANO):
        val, f = piece_sup(sp, n, x, "support_card")
        supp = sorted(x.support())
        best = max(sp.norm(SparseVector((k, x[k]) for k in c))
                   for r in range(0, min(n, len(supp)) + 1) for c in itertools.combinations(supp, r))
        assert abs(val - best) <= 1e-9 * max(1, best)
        assert len(f) <= n
        assert abs(evaluate(f, x) - val) <= 1e-9 * max(1, val)


def test_schauder_piece():
    x = SparseVector({1: 1.0, 2: 1.0, 3: 1.0})
    assert piece_sup(SCHREIER, 1, x, "support_card")[0] == 1.0
    assert piece_sup(SCHREIER, 2, x, "schauder")[0] == 1.0
    assert piece_sup(SCHREIER, 3, x, "schauder")[0] == 2.0


def test_from_config_round_trip():
    for sp in (NAKANO, SCHREIER, PATCHED):
        again = SpaceDescriptor.from_config(sp.to_json())
        assert again.to_json() == sp.to_json()
