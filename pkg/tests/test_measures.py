import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import joint_sources
from ruq import measures as ms
from ruq.errors import ParameterError, UsageError
from ruq.measures import RenyiOrderSpec, Variant
from ruq.probability import JointSource, Pmf, iid_extend, random_source

S_GRID = [-0.9, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 5.0]


def H(src, variant, s=0.0, t=None):
    return ms.conditional_entropy(src, RenyiOrderSpec(variant, s, t))


# --- divergences -----------------------------------------------------------

def test_divergence_of_identical_pmfs_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    for s in (-0.5, 1e-12, 0.5, 3.0):
        assert abs(ms.renyi_divergence(p, p, s)) < 1e-14


def test_relative_entropy_example():
    expect = 0.875 * math.log(1.75) + 0.125 * math.log(0.25)
    assert ms.renyi_divergence(np.array([0.875, 0.125]), np.array([0.5, 0.5]), 0.0) == pytest.approx(expect, abs=1e-15)
    assert expect == pytest.approx(0.3163, abs=1e-4)


def test_divergence_disjoint_support_is_infinite():
    assert ms.renyi_divergence(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.5) == math.inf


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=4), st.floats(-0.95, 4).filter(lambda s: abs(s) > 1e-3))
def test_divergence_matches_oracle(w, s):
    p = np.array(w) / sum(w)
    q = np.roll(p, 1)
    assert ms.renyi_divergence(p, q, s) == pytest.approx(oracles.renyi_div(p, q, s), rel=1e-10, abs=1e-12)


def test_data_processing_for_divergence():
    rng = np.random.default_rng(11)
    for _ in range(100):
        k, l = rng.integers(2, 5, size=2)
        p = rng.dirichlet(np.ones(k))
        q = rng.dirichlet(np.ones(k))
        W = rng.dirichlet(np.ones(l), size=k)
        for s in (-1.0 + 1e-9, -0.5, 1e-12, 0.5, 1.0):
            assert ms.renyi_divergence(p @ W, q @ W, s) <= ms.renyi_divergence(p, q, s) + 1e-12


# --- conditional entropies ---------------------------------------------------

def test_example_shannon(example):
    assert H(example, "shannon") == pytest.approx(0.8 * oracles.entropy([0.875, 0.125]) + 0.2 * math.log(2), abs=1e-15)
    assert round(H(example, "shannon"), 4) == 0.4400


def test_example_min_variants(example):
    assert H(example, "min") == pytest.approx(-math.log(0.875), abs=1e-15)
    assert H(example, "min_gallager") == pytest.approx(-math.log(0.8), abs=1e-15)
    assert H(example, "min") == pytest.approx(0.13353, abs=1e-5)
    assert H(example, "min_gallager") == pytest.approx(0.22314, abs=1e-5)


@pytest.mark.parametrize("s", [-0.9, -0.5, 0.5, 1.0, 3.0])
def test_uniform_plain_is_log2(uniform22, s):
    assert H(uniform22, "plain", s) == pytest.approx(math.log(2), abs=1e-14)


def test_example_order_half(example):
    expect = 2 * math.log(0.8 * (math.sqrt(0.875) + math.sqrt(0.125)) + 0.2 * 2 * math.sqrt(0.5))
    assert H(example, "plain", -0.5) == pytest.approx(expect, abs=1e-14)
    assert H(example, "plain", -0.5) == pytest.approx(0.5462, abs=1e-4)


@given(joint_sources(), st.floats(-0.95, 6).filter(lambda s: abs(s) > 1e-4))
def test_plain_and_gallager_match_oracle(src, s):
    assert ms.plain_entropy(src, s) == pytest.approx(oracles.plain_cond(src.joint, s), rel=1e-9, abs=1e-11)
    assert ms.gallager_entropy(src, s) == pytest.approx(oracles.gallager_cond(src.joint, s), rel=1e-9, abs=1e-11)


@given(joint_sources(), st.floats(-0.9, 4).filter(lambda s: abs(s) > 1e-3), st.floats(-0.9, 4))
def test_two_param_matches_oracle(src, s, t):
    assert ms.two_param_entropy(src, s, t) == pytest.approx(oracles.two_param_cond(src.joint, s, t), rel=1e-9, abs=1e-10)


@given(joint_sources())
def test_min_and_shannon_match_oracle(src):
    assert ms.min_entropy(src) == pytest.approx(oracles.min_cond(src.joint), abs=1e-13)
    assert ms.min_gallager_entropy(src) == pytest.approx(oracles.min_gallager_cond(src.joint), abs=1e-13)
    assert H(src, "shannon") == pytest.approx(oracles.shannon_cond(src.joint), abs=1e-12)


def test_domain_errors(example):
    with pytest.raises(ParameterError):
        ms.plain_entropy(example, -1.5)
    with pytest.raises(ParameterError):
        ms.two_param_entropy(example, 0.5, -1.0)
    with pytest.raises(ParameterError):
        RenyiOrderSpec(Variant.TWO_PARAM, 0.5)
    with pytest.raises(UsageError):
        ms.conditional_entropy(example, RenyiOrderSpec.gallager(0.5), relative_q=np.array([0.5, 0.5]))


def test_order_zero_boundary(example):
    # s = -1: conditional Hartley entropy log |support|
    assert ms.plain_entropy(example, -1.0) == pytest.approx(math.log(2))
    assert ms.gallager_entropy(example, -1.0) == pytest.approx(math.log(2))


def test_relative_q_form(example):
    q = np.array([0.3, 0.7])
    spec = RenyiOrderSpec.plain(0.5)
    joint = example.joint
    expect = -oracles.renyi_div(joint.ravel(), np.tile(q, 2), 0.5)
    assert ms.conditional_entropy(example, spec, relative_q=q) == pytest.approx(expect, abs=1e-13)
    # Q = P_E recovers the plain conditional entropy
    assert ms.conditional_entropy(example, spec, relative_q=example.p_e) == pytest.approx(H(example, "plain", 0.5), abs=1e-13)


# --- invariants ----------------------------------------------------------------

def _sources():
    rng = np.random.default_rng(5)
    out = [random_source(rng, a, e) for a, e in [(2, 2), (3, 2), (4, 3), (2, 1)]]
    out.append(random_source(rng, 4, 3, sparsity=0.4))
    return out


@pytest.mark.parametrize("variant", ["plain", "gallager"])
def test_monotone_in_order(variant):
    for src in _sources():
        vals = [H(src, variant, s) for s in S_GRID]
        assert all(a >= b - 1e-10 for a, b in zip(vals, vals[1:]))


def test_scaled_entropy_concave():
    for src in _sources():
        s = np.arange(-0.9, 5.0, 0.05)
        v = ms.scaled_entropy_grid(src, s)
        assert np.max(np.diff(v, 2)) <= 1e-8


def test_sandwich():
    for src in _sources():
        for s in S_GRID:
            assert ms.plain_entropy(src, s) <= ms.gallager_entropy(src, s) + 1e-12
            if -1 < s < 1:
                assert ms.plain_entropy(src, s) >= ms.gallager_entropy(src, 1 / (1 - s) - 1) - 1e-12


def test_limits():
    for src in _sources():
        sh = H(src, "shannon")
        assert abs(ms.plain_entropy(src, 1e-7) - sh) < 1e-5
        assert abs(ms.plain_entropy(src, -1e-7) - sh) < 1e-5
        assert abs(ms.gallager_entropy(src, 1e-7) - sh) < 1e-5
        # exact large-order bracket: the gap to the min variants is O(1/s)
        s = 1e3
        hmin, hgal = ms.min_entropy(src), ms.min_gallager_entropy(src)
        star = src.conditionals.max(axis=0) == src.conditionals.max()
        pe_star = src.p_e[src.active_e][star].sum()
        plain = ms.plain_entropy(src, s)
        assert (1 + s) / s * hmin - math.log(src.a_size) / s - 1e-12 <= plain
        assert plain <= (1 + s) / s * hmin - math.log(pe_star) / s + 1e-12
        gal = ms.gallager_entropy(src, s)
        assert (1 + s) / s * hgal - math.log(src.a_size) / s - 1e-12 <= gal <= (1 + s) / s * hgal + 1e-12


def test_large_order_within_1e3_of_min(example, uniform22):
    rng = np.random.default_rng(8)
    peaked = JointSource(np.outer(rng.dirichlet(np.ones(3)), [0.5, 0.5]))
    for src in (example, uniform22, peaked):
        assert abs(ms.plain_entropy(src, 1e3) - ms.min_entropy(src)) < 1e-3
        assert abs(ms.gallager_entropy(src, 1e3) - ms.min_gallager_entropy(src)) < 1e-3


def test_two_param_diagonal_is_gallager():
    for src in _sources():
        for s in (-0.5, 0.5, 1.0, 2.0):
            assert abs(ms.two_param_entropy(src, s, s) - ms.gallager_entropy(src, s)) < 1e-12


def test_additivity():
    for src in _sources()[:3]:
        for n in (2, 3):
            big = iid_extend(src, n).to_joint()
            for s in (-0.5, 0.5, 2.0):
                assert ms.plain_entropy(big, s) == pytest.approx(n * ms.plain_entropy(src, s), abs=1e-9)
                assert ms.gallager_entropy(big, s) == pytest.approx(n * ms.gallager_entropy(src, s), abs=1e-9)


# --- Gallager function and optimiser ----------------------------------------

def test_gallager_phi_examples(example):
    assert abs(ms.gallager_phi(example, 0.0)) < 1e-15
    point = JointSource(np.array([[1.0]]))
    for s in (-0.5, 0.3, 0.9):
        assert abs(ms.gallager_phi(point, s)) < 1e-15
    with pytest.raises(ParameterError):
        ms.gallager_phi(example, 1.0)


@given(joint_sources(), st.floats(-0.9, 5).filter(lambda s: abs(s) > 1e-3))
def test_gallager_phi_identity(src, s):
    lhs = ms.gallager_entropy(src, s)
    rhs = -(1 + s) / s * ms.gallager_phi(src, s / (1 + s))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_optimizer_q_examples(example, uniform22):
    np.testing.assert_allclose(ms.optimizer_q(uniform22, 0.7).probs, [0.5, 0.5])
    q = ms.optimizer_q(example, 1.0).probs
    w = np.sqrt([0.5, 0.02])
    np.testing.assert_allclose(q, w / w.sum(), atol=1e-15)
    np.testing.assert_allclose(q, [0.8333, 0.1667], atol=1e-4)
    with pytest.raises(ParameterError):
        ms.optimizer_q(example, 0.0)
    with pytest.raises(ParameterError):
        ms.optimizer_q(example, -1.0)


def test_optimizer_q_attains_gallager_and_beats_random_q():
    rng = np.random.default_rng(21)
    for src in _sources():
        for s in (-0.5, 0.5, 2.0):
            spec = RenyiOrderSpec.plain(s)
            q = ms.optimizer_q(src, s)
            best = ms.conditional_entropy(src, spec, relative_q=q)
            assert best == pytest.approx(ms.gallager_entropy(src, s), abs=1e-10)
            for _ in range(100):
                rq = rng.dirichlet(np.ones(src.e_size))
                assert best >= ms.conditional_entropy(src, spec, relative_q=rq) - 1e-12


# --- critical rates ------------------------------------------------------------

def test_critical_rate_examples(example, uniform22):
    for s in (0.1, 1.0, 4.0):
        assert ms.critical_rate(uniform22, s) == pytest.approx(math.log(2), abs=1e-14)
        assert ms.critical_rate(uniform22, s, "up") == pytest.approx(math.log(2), abs=1e-14)
    point = JointSource(np.array([[0.6, 0.0], [0.0, 0.4]]))
    assert abs(ms.critical_rate(point, 1.0)) < 1e-15
    with pytest.raises(ParameterError):
        ms.critical_rate(example, 0.0)


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0, 2.0])
def test_critical_rate_matches_finite_difference(s):
    h = 1e-5
    for src in _sources():
        fd = (oracles.plain_cond(src.joint, s + h) * (s + h) - oracles.plain_cond(src.joint, s - h) * (s - h)) / (2 * h)
        assert ms.critical_rate(src, s) == pytest.approx(fd, abs=1e-6)

        def up(t):
            return t * oracles.two_param_cond(src.joint, t, s)

        fd_up = (up(s + h) - up(s - h)) / (2 * h)
        assert ms.critical_rate(src, s, "up") == pytest.approx(fd_up, abs=1e-6)


def test_scaled_grids_match_pointwise(example):
    ts = np.array([-0.5, 0.0, 0.3, 2.0])
    np.testing.assert_allclose(ms.scaled_entropy_grid(example, ts), [ms.scaled_entropy(example, t) for t in ts], atol=1e-14)
    np.testing.assert_allclose(
        ms.scaled_two_param_grid(example, ts, 0.5), [ms.scaled_two_param(example, t, 0.5) for t in ts], atol=1e-14
    )
