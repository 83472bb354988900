import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetaexp.construction import (
    BasePolicy,
    ConstructionError,
    ConstructionParams,
    SparseSpec,
    auto_checkpoints,
    check_monotonicity,
    condition_record,
    find_n0,
    holder_witness_bounds,
    in_bounded_set,
    insert_apply,
    inserted_digit,
    insertion_positions,
    ratio_envelope,
    ratio_series,
    seed_delete,
    sequence_diagnostics,
    sparse_index,
    synthesize,
)
from thetaexp.expansion import AdmissibilityError, DigitWord
from thetaexp.intervals import FloorAmbiguityError, certified_floor
from thetaexp.qfield import FieldSpec
from oracles import inserted_digit_mp, q_scaled, ratio_mp

GOLDEN_WORD = (2, 2, 2, 2, 41, 2, 2, 2, 127)


@pytest.fixture(scope="module")
def golden():
    return ConstructionParams(2, 10, Fraction(4), SparseSpec(Fraction(3, 4))).with_n0(2, True)


def _sparse_mp(k, gamma):
    with mpmath.workdps(80):
        return int(mpmath.floor(mpmath.exp(mpmath.mpf(k) ** gamma)))


@pytest.mark.parametrize("k, want", [(1, 2), (4, 16), (5, 28), (10, 276)])
def test_sparse_index_examples(k, want):
    assert sparse_index(k, Fraction(3, 4)) == want


@pytest.mark.parametrize("gamma", [Fraction(3, 4), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2)])
def test_sparse_index_matches_high_precision(gamma):
    g = mpmath.mpf(gamma.numerator) / gamma.denominator
    for k in list(range(1, 60)) + [100, 500]:
        assert sparse_index(k, gamma) == _sparse_mp(k, g)


def test_sparse_index_rejects_bad_input():
    with pytest.raises(ValueError):
        sparse_index(0)
    with pytest.raises(ValueError):
        SparseSpec(Fraction(1))
    with pytest.raises(ValueError):
        SparseSpec(Fraction(0))


def test_certified_floor_reports_ambiguity():
    from mpmath import iv

    # exactly an integer: the enclosure always straddles it
    with pytest.raises(FloorAmbiguityError, match="cannot decide floor"):
        certified_floor(lambda: iv.sqrt(iv.mpf(4)) * iv.sqrt(iv.mpf(2)) ** 2 / 2, max_prec=256)


def test_params_validation():
    with pytest.raises(ValueError):
        ConstructionParams(2, 5, Fraction(1))
    with pytest.raises(ValueError):
        ConstructionParams(2, 10, Fraction(0))
    with pytest.raises(ValueError):
        ConstructionParams(2, 10, Fraction(1), base=BasePolicy("const", (11,)))
    with pytest.raises(ValueError):
        ConstructionParams(4, 20, Fraction(1))


def test_base_policy_parse_roundtrip():
    for text in ("const:2", "periodic:2,3,5", "random:7,2,10"):
        p = BasePolicy.parse(text)
        assert BasePolicy.parse(str(p)) == p
    assert BasePolicy.parse("periodic:2,3").digits(5) == [2, 3, 2, 3, 2]
    r = BasePolicy.parse("random:7,2,10")
    assert r.digits(50) == r.digits(50)
    with pytest.raises(ValueError):
        BasePolicy.parse("wave:1")


def test_conditions_golden(golden):
    rec = condition_record(2, golden)
    with mpmath.workdps(40):
        c5 = mpmath.log(5) * mpmath.log(mpmath.log(5))
    assert rec.cond_a == pytest.approx(float(4 * 2 * 4 / c5), rel=1e-12)
    assert rec.cond_a == pytest.approx(41.8, abs=0.05)
    assert rec.gap == 4 and rec.gap_limit == pytest.approx(4.58, abs=0.01)
    assert condition_record(3, golden).gap == 7
    assert condition_record(4, golden).gap == 12
    rep = find_n0(ConstructionParams(2, 10, Fraction(4)), 1000)
    assert rep.n0 == 2
    assert all(r.cond_b < 2 for r in rep.records)


def test_conditions_no_candidate():
    rep = find_n0(ConstructionParams(2, 10, Fraction(1)), 1000)
    assert rep.n0 is None
    assert "no k" in rep.note


def test_conditions_small_gamma():
    rep = find_n0(ConstructionParams(2, 10, Fraction(1), SparseSpec(Fraction(1, 4))), 400)
    assert rep.n0 is not None
    assert all(r.ok for r in rep.records if r.k >= rep.n0)


def test_diagnostics_examples():
    d = sequence_diagnostics([5], SparseSpec())[0]
    with mpmath.workdps(40):
        w = lambda n: mpmath.log(n) * mpmath.log(mpmath.log(n))  # noqa: E731
        want = float(w(46) - w(28))
    assert d.weight_increment == pytest.approx(want, rel=1e-12)
    assert d.weight_increment == pytest.approx(1.13, abs=0.01)


def test_diagnostics_log_domain_continuity():
    # both modes agree where the integer path is still cheap
    import thetaexp.construction as c

    spec = SparseSpec()
    exact = sequence_diagnostics([200], spec)[0]
    saved = c.LOG_DOMAIN_THRESHOLD
    try:
        c.LOG_DOMAIN_THRESHOLD = 1
        approx = sequence_diagnostics([200], spec)[0]
    finally:
        c.LOG_DOMAIN_THRESHOLD = saved
    assert approx.log_domain and not exact.log_domain
    assert approx.weight_increment == pytest.approx(exact.weight_increment, rel=1e-9)
    assert approx.rel_gap == pytest.approx(exact.rel_gap, rel=1e-9)


def test_golden_word(golden):
    w = synthesize(golden, 9)
    assert w.digits == GOLDEN_WORD
    assert w.inserted == frozenset({5, 9})
    assert inserted_digit(Fraction(4), 8, 5) == inserted_digit_mp(4, 8, 5) == 41
    assert inserted_digit(Fraction(4), 55, 9) == inserted_digit_mp(4, 55, 9) == 127


def test_synthesize_rejects_short_depth(golden):
    with pytest.raises(ConstructionError):
        synthesize(golden, 4)


def test_inserted_digit_matches_high_precision():
    rng = np.random.default_rng(3)
    for _ in range(200):
        alpha = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 9)))
        A = int(rng.integers(1, 10**9))
        n = int(rng.integers(3, 10**7))
        want = inserted_digit_mp(alpha.numerator, A, n, dps=80) if alpha.denominator == 1 else None
        if want is None:
            with mpmath.workdps(80):
                c = mpmath.log(n) * mpmath.log(mpmath.log(n))
                want = int(mpmath.floor(mpmath.mpf(alpha.numerator) / alpha.denominator * A / c))
        assert inserted_digit(alpha, A, n) == want


def test_ratio_golden(golden):
    w = synthesize(golden, 9)
    (s,) = ratio_series(w, [9])
    assert s.L == 127 and s.S == 182
    assert s.R == pytest.approx(float(ratio_mp(GOLDEN_WORD, 9)), rel=1e-14)
    assert abs(s.R - 3.9941) <= 5e-4


def test_ratio_small_word():
    (s,) = ratio_series((2, 2, 2), [3])
    assert (s.L, s.S) == (2, 6)
    assert s.R == pytest.approx(2 * math.log(3) * math.log(math.log(3)) / 4)
    assert s.R >= 0
    with pytest.raises(ValueError):
        ratio_series((2, 2, 2), [2])


def test_ratio_constant_word_bound():
    n = 10**5
    (s,) = ratio_series([3] * n, [n])
    assert s.R < 0.01
    assert s.R == pytest.approx(3 * math.log(n) * math.log(math.log(n)) / ((n - 1) * 3))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 40), min_size=3, max_size=300))
def test_ratio_series_matches_reference(digits):
    cps = auto_checkpoints(len(digits), 10)
    for s in ratio_series(digits, cps):
        if s.defined:
            assert s.R == pytest.approx(float(ratio_mp(digits, s.n)), rel=1e-13)
        else:
            assert s.S == s.L


def test_ratio_big_digits_fall_back_to_python_ints():
    digits = [2, 2, 2**70, 3]
    (s,) = ratio_series(digits, [4])
    assert s.S == 2**70 + 7 and s.L == 2**70


def test_monotonicity_golden(golden):
    rep = check_monotonicity(synthesize(golden, 9), golden)
    assert rep.ok
    assert [r.digit for r in rep.witnesses] == [41, 127]


def test_monotonicity_violation_is_reported():
    p = ConstructionParams(2, 10, Fraction(1, 2)).with_n0(1, False)
    rep = check_monotonicity(synthesize(p, 100), p)
    assert not rep.ok
    assert not rep.N0_verified
    assert rep.witnesses[0].digit < 10


def test_monotonicity_vacuous():
    p = ConstructionParams(2, 10, Fraction(4)).with_n0(2, True)
    w = DigitWord((2, 2, 2), FieldSpec(2))
    assert check_monotonicity(w, p).ok


def test_seed_delete_examples(golden):
    w = synthesize(golden, 9)
    assert seed_delete(w).digits == (2,) * 7
    plain = DigitWord((3, 4, 2), FieldSpec(2))
    assert seed_delete(plain) == plain


def test_insert_apply_matches_synthesize(golden):
    assert insert_apply([2] * 7, golden, 9).digits == GOLDEN_WORD
    assert insert_apply([2] * 7, golden).digits == GOLDEN_WORD[:-1]
    assert insert_apply([2] * 8, golden).digits == GOLDEN_WORD + (2,)
    assert insert_apply([2] * 3, golden).digits == (2, 2, 2)
    with pytest.raises(AdmissibilityError):
        insert_apply([2, 11], golden)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(2, 10), min_size=1, max_size=400))
def test_round_trip(base):
    p = ConstructionParams(2, 10, Fraction(4)).with_n0(2, True)
    y = insert_apply(base, p)
    assert list(seed_delete(y).digits) == base
    assert in_bounded_set(seed_delete(y), 10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 10), min_size=30, max_size=120), st.integers(1, 29), st.data())
def test_prefix_determinism(base, j, data):
    p = ConstructionParams(2, 10, Fraction(4)).with_n0(2, True)
    other = base[:j] + data.draw(st.lists(st.integers(2, 10), min_size=len(base) - j,
                                          max_size=len(base) - j))
    y1, y2 = insert_apply(base, p), insert_apply(other, p)
    # output position of the j-th base digit, plus any insertions right after it
    base_pos = [i for i in range(1, len(y1) + 1) if i not in y1.inserted]
    keep = base_pos[j - 1]
    while keep + 1 in y1.inserted:
        keep += 1
    assert y1.digits[:keep] == y2.digits[:keep]


def test_envelope_golden(golden):
    w = synthesize(golden, 9)
    b2 = ratio_envelope(golden, w, 2)
    assert [s.n for s in b2.samples] == [5, 6, 7, 8]
    assert b2.ok
    w_long = synthesize(golden, 200)
    b3 = ratio_envelope(golden, w_long, 3)
    b2l = ratio_envelope(golden, w_long, 2)
    assert b3.ok and b2l.ok
    assert b3.low > b2l.low


def test_envelope_small_gamma_widths_shrink():
    p = ConstructionParams(2, 10, Fraction(1), SparseSpec(Fraction(1, 4)))
    n0 = find_n0(p, 400).n0
    p = p.with_n0(n0, True)
    pos = insertion_positions(p, 60)
    w = synthesize(p, pos[-1][0] + 1)
    blocks = [ratio_envelope(p, w, k) for _, k in insertion_positions(p, len(w))[:-1]]
    assert all(b.ok for b in blocks)
    widths = [b.width for b in blocks]
    assert all(b < a for a, b in zip(widths, widths[1:]))


def test_holder_bounds_golden(golden):
    w = synthesize(golden, 9)
    rep = holder_witness_bounds(w, golden)
    assert rep.ok and rep.t == 2 and rep.C == 9
    assert rep.K_y == q_scaled(GOLDEN_WORD, 2)
    assert rep.K_x == q_scaled((2,) * 7, 2)
    assert rep.K_y <= rep.K_x * 2 ** (4 + 18)


def test_holder_bounds_vacuous(golden):
    w = DigitWord((2, 2, 2), FieldSpec(2))
    rep = holder_witness_bounds(w, golden)
    assert rep.t == 0 and rep.ok
