from fractions import Fraction

import numpy as np
import pytest

import oracles
from ruq.errors import ParseError, ParameterError, ResourceError, UnsupportedError, ValidationError
from ruq.gf2m import Gf2mField, gf2_mul, split_pieces
from ruq.hashing import (
    FamilyKind,
    Level,
    collision_matrix,
    collision_probability,
    expected_preimage_check,
    load_custom_family,
    make_affine_prime_family,
    make_binning_family,
    make_constant_family,
    make_custom_family,
    make_gf2m_family,
    make_identity_family,
    max_collision,
    verify_hierarchy,
    verify_universality,
)
from ruq.probability import random_source
from ruq.report import Verdict

GF_CASES = [(4, 2), (6, 2), (6, 3), (8, 4)]


def test_binning_small_examples():
    fam = make_binning_family(2, 2)
    assert fam.seed_count == 4
    tab = fam.table()
    for a in range(2):
        assert np.bincount(tab[:, a], minlength=2).tolist() == [2, 2]
    fam3 = make_binning_family(3, 2)
    assert fam3.seed_count == 8
    for a1 in range(3):
        for a2 in range(a1 + 1, 3):
            assert collision_probability(fam3, a1, a2) == Fraction(1, 2)
    fam4 = make_binning_family(4, 3)
    assert fam4.seed_count == 81
    assert verify_universality(fam4, "strongly_universal").passed


def test_binning_table_enumerates_all_functions():
    fam = make_binning_family(3, 3)
    rows = {tuple(r) for r in fam.table().tolist()}
    assert len(rows) == 27


def test_eval_is_one_based():
    fam = make_binning_family(3, 2)
    vals = {fam.eval(s, a) for s in range(fam.seed_count) for a in range(3)}
    assert vals == {1, 2}
    with pytest.raises(ParameterError):
        fam.eval(0, 3)


def test_binning_cap_and_lazy():
    with pytest.raises(ResourceError):
        make_binning_family(30, 2)
    lazy = make_binning_family(30, 2, lazy=True)
    assert not lazy.enumerable
    rng = np.random.default_rng(0)
    for seed in lazy.sample_seeds(rng, 5):
        assert set(lazy.bucket_row(seed).tolist()) <= {0, 1}
    with pytest.raises(UnsupportedError):
        lazy.table()
    with pytest.raises(UnsupportedError):
        collision_probability(lazy, 0, 1)
    rep = verify_universality(lazy, "universal2")
    assert rep.verdicts() == [Verdict.PRECONDITION_FAILED]


@pytest.mark.parametrize("m,l", GF_CASES)
def test_gf2m_collision_is_exact_for_every_pair(m, l):
    field = Gf2mField.standard(m)
    expect = Fraction(2 ** (m - l) - 1, 2**m - 1)
    for j in range(1, m // l + 1):
        fam = make_gf2m_family(field, l, j)
        c = collision_matrix(fam, counts=True)
        off = c[~np.eye(c.shape[0], dtype=bool)]
        assert set(off.tolist()) == {expect * fam.seed_count}
        assert max_collision(fam)[0] == expect
        rep = verify_universality(fam, "universal2")
        assert rep.passed
        assert f"collision={expect}" in rep.checks[0].note


def test_gf2m_examples():
    field = Gf2mField.standard(4)
    fam = make_gf2m_family(field, 2, 1)
    assert collision_probability(fam, 3, 9) == Fraction(3, 15)
    assert collision_probability(fam, 5, 5) == 1
    f63 = Gf2mField.standard(6)
    for j in (1, 2):
        assert max_collision(make_gf2m_family(f63, 3, j))[0] == Fraction(1, 9)


def test_gf2m_family_matches_definition():
    field = Gf2mField.standard(6)
    fam = make_gf2m_family(field, 2, 2)
    tab = fam.table()
    for x in range(1, 64):
        for a in range(64):
            assert tab[x - 1, a] == split_pieces(gf2_mul(field, x, a), 6, 2)[1]


def test_gf2m_zero_maps_to_zero_piece_and_fails_strong():
    fam = make_gf2m_family(Gf2mField.standard(4), 2, 1)
    assert set(fam.table()[:, 0].tolist()) == {0}
    assert not verify_universality(fam, "strongly_universal").passed


def test_gf2m_parameter_errors():
    field = Gf2mField.standard(6)
    with pytest.raises(ParameterError):
        make_gf2m_family(field, 4, 1)
    with pytest.raises(ParameterError):
        make_gf2m_family(field, 3, 3)


def test_collision_matches_oracle():
    rng = np.random.default_rng(4)
    table = rng.integers(1, 4, size=(7, 5))
    fam = make_custom_family(table, 3)
    for a1 in range(5):
        for a2 in range(5):
            assert collision_probability(fam, a1, a2) == oracles.collision_fraction(table.tolist(), a1, a2)


def test_constant_and_identity_families():
    const = make_constant_family(4, 2)
    assert collision_probability(const, 0, 1) == 1
    assert not verify_universality(const, "universal2").passed
    # with one bucket every family is trivially universal2
    assert verify_universality(make_constant_family(4), "universal2").passed
    ident = make_identity_family(5)
    rep = verify_universality(ident, "universal2")
    assert rep.passed
    assert max_collision(ident)[0] == 0


def test_affine_prime_family_epsilon_is_certified():
    for a_size, M in ((5, 2), (7, 3), (6, 4)):
        fam = make_affine_prime_family(a_size, M)
        assert fam.kind is FamilyKind.AFFINE_PRIME
        assert verify_universality(fam, "almost_universal2").passed
        worst, _ = max_collision(fam)
        assert float(worst) <= fam.epsilon_claim / M + 1e-12


def test_custom_family_weighted_seeds():
    table = [[1, 2, 1], [2, 1, 1], [1, 1, 2]]
    fam = make_custom_family(table, 2, [0.5, 0.25, 0.25])
    assert not fam.uniform_seeds
    assert collision_probability(fam, 0, 2) == pytest.approx(0.5)
    assert fam.epsilon_claim == pytest.approx(2 * 0.5)
    assert verify_universality(fam, "almost_universal2").passed
    with pytest.raises(ValidationError):
        make_custom_family(table, 2, [0.5, 0.5, 0.5])


def test_load_custom_family():
    text = "M=2 seeds=2\n0.5 1 2 1\n0.5 2 1 1\n"
    fam = load_custom_family(text)
    assert fam.table().tolist() == [[0, 1, 0], [1, 0, 0]]
    assert fam.seed_prob(1) == 0.5
    with pytest.raises(ParseError):
        load_custom_family("M=2 seeds=3\n0.5 1 2\n0.5 2 1\n")
    with pytest.raises(ParseError):
        load_custom_family("seeds=1\n1.0 1\n")
    with pytest.raises(ValidationError):
        load_custom_family("M=2 seeds=2\n0.7 1 2\n0.7 2 1\n")


def test_strong_pairwise_fallback_flag():
    # a -> x a + b mod 11 over all (x, b): pairwise independent, 11^11 joint cells
    p = 11
    table = [[(x * a + b) % p + 1 for a in range(p)] for x in range(p) for b in range(p)]
    fam = make_custom_family(table, p)
    rep = verify_universality(fam, "strongly_universal")
    assert rep.passed
    assert "pairwise-only" in rep.flags
    assert {c.check_id for c in rep.checks} == {"strongly_universal.marginal", "strongly_universal.pairwise"}


def _builtin_families():
    yield make_binning_family(3, 2)
    yield make_binning_family(4, 3)
    for m, l in GF_CASES[:3]:
        yield make_gf2m_family(Gf2mField.standard(m), l, 1)
    yield make_affine_prime_family(5, 2)
    yield make_identity_family(4)


def test_hierarchy_on_builtin_families():
    for fam in _builtin_families():
        rep = verify_hierarchy(fam)
        assert rep.passed, rep.to_text()
        if verify_universality(fam, "strongly_universal").passed:
            assert verify_universality(fam, "universal2").passed
        if verify_universality(fam, "universal2").passed:
            for eps in (1.0, 1.3, 4.0):
                assert verify_universality(fam, Level.ALMOST_UNIVERSAL2, eps).passed


def test_expected_preimage_bound():
    rng = np.random.default_rng(9)
    for fam in _builtin_families():
        src = random_source(rng, fam.domain_size, 3, sparsity=0.3)
        rep = expected_preimage_check(fam, src)
        assert rep.passed, rep.to_text()
        assert rep.min_slack >= -1e-12


def test_expected_preimage_detects_bad_claim():
    fam = make_constant_family(3, 2)
    src = random_source(np.random.default_rng(1), 3, 2)
    assert not expected_preimage_check(fam, src, epsilon=0.1).passed
