import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siplab import sampling
from siplab.errors import ConfigError, DimensionMismatch, LayoutError, ZeroVectorError
from siplab.norms import (
    BlockNorm,
    FiniteSupportElement,
    LpNorm,
    SumSpace,
    SumStream,
    default_mixed_block,
    finite_difference_gradient,
    mixed_block,
    model_from_config,
    model_to_config,
    norm_eval,
    support_functional,
)

MODELS = [
    LpNorm(1.5, 3),
    LpNorm(3.0, 3),
    LpNorm(4.0, 2),
    default_mixed_block(),
    mixed_block(3.0, [(2, 2.0), (2, 4.0)]),
]


def test_lp_norm_basic_values():
    assert norm_eval([3.0, 4.0], LpNorm(2, 2)) == pytest.approx(5.0, abs=1e-15)
    assert norm_eval([1.0, 1.0, 1.0], LpNorm(3, 3)) == pytest.approx(3 ** (1 / 3), rel=1e-15)
    assert norm_eval(np.zeros(3), LpNorm(3, 3)) == 0.0


def test_dimension_mismatch_names_dims():
    with pytest.raises(DimensionMismatch) as exc:
        norm_eval([1.0, 2.0], LpNorm(2, 3))
    assert exc.value.expected == 3
    assert exc.value.actual == 2


def test_nonfinite_rejected():
    with pytest.raises(ConfigError):
        norm_eval([np.nan, 1.0], LpNorm(2, 2))


def test_sum_space_norm_matches_flatten_oracle():
    # two planes with matching exponents: flattening is an isometry
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), length=2),))
    z = FiniteSupportElement({(0, 0): [1.0, 0.0], (0, 1): [0.0, 1.0]})
    flat = LpNorm(3.0, 4).norm(np.array([1.0, 0.0, 0.0, 1.0]))
    assert flat == pytest.approx(2 ** (1 / 3), rel=1e-15)
    assert ss.norm(z) == pytest.approx(flat, rel=1e-14)
    # norm is the p-sum over present blocks only
    assert ss.norm(FiniteSupportElement({})) == 0.0


def test_support_unit_coordinate_vector():
    for p in (1.5, 2.0, 3.0, 4.0):
        m = LpNorm(p, 3)
        e1 = np.array([1.0, 0.0, 0.0])
        assert np.allclose(support_functional(e1, m), e1, atol=1e-15)


def test_support_closed_form_l3():
    m = LpNorm(3, 2)
    y = np.array([1.0, 1.0])
    c = support_functional(y, m)
    assert np.allclose(c, 2 ** (-2 / 3), rtol=1e-14)
    # phi_y(y) = ||y||
    assert float(c @ y) == pytest.approx(2 ** (1 / 3), rel=1e-14)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: json.dumps(m.config())[:40])
def test_support_functional_contract(m):
    rng = sampling.rng_from_seed(11)
    for _ in range(200):
        y = sampling.sample_scaled(rng, m.dim)
        c = support_functional(y, m)
        ny = m.norm(y)
        assert abs(float(c @ y) - ny) <= 1e-9 * ny
    # dual norm does not exceed one (sampled on the unit sphere of m)
    worst = 0.0
    y = sampling.sample_scaled(rng, m.dim)
    c = support_functional(y, m)
    for _ in range(1000):
        u = sampling.sample_direction(rng, m.dim)
        u = u / m.norm(u)
        worst = max(worst, abs(float(c @ u)))
    assert worst <= 1.0 + 1e-7


def test_zero_vector_has_no_support():
    with pytest.raises(ZeroVectorError, match="zero vector has no supporting functional"):
        support_functional(np.zeros(2), LpNorm(3, 2))


def test_fd_gradient_euclidean():
    g = finite_difference_gradient([3.0, 4.0], LpNorm(2, 2))
    assert np.allclose(g, [0.6, 0.8], atol=1e-8)
    g = finite_difference_gradient([0.0, 1.0, 0.0], LpNorm(4, 3))
    assert np.allclose(g, [0.0, 1.0, 0.0], atol=1e-8)


def test_fd_gradient_validates():
    with pytest.raises(ZeroVectorError):
        finite_difference_gradient(np.zeros(2), LpNorm(3, 2))
    with pytest.raises(ConfigError):
        finite_difference_gradient([1.0, 0.0], LpNorm(3, 2), h=0.0)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: json.dumps(m.config())[:40])
def test_fd_gradient_matches_support(m):
    rng = sampling.rng_from_seed(101)
    for _ in range(50):
        y = sampling.sample_scaled(rng, m.dim)
        diff = np.max(np.abs(support_functional(y, m) - finite_difference_gradient(y, m)))
        assert diff <= 1e-5


def test_mixed_block_gradient_example():
    # gradient of the norm is the supporting functional; cross-check by differences
    m = mixed_block(4.0, [(1, 2.0), (1, 2.0)])
    y = np.array([1.0, 2.0])
    assert np.max(np.abs(m.support(y) - finite_difference_gradient(y, m))) <= 1e-6


@pytest.mark.parametrize("m", MODELS, ids=lambda m: json.dumps(m.config())[:40])
def test_homogeneity_and_triangle_sampled(m):
    rng = sampling.rng_from_seed(7)
    X = np.stack([sampling.sample_scaled(rng, m.dim) for _ in range(1000)])
    Y = np.stack([sampling.sample_scaled(rng, m.dim) for _ in range(1000)])
    t = rng.uniform(-3.0, 3.0, 1000)
    nx = m.norm_batch(X)
    assert np.all(np.abs(m.norm_batch(t[:, None] * X) - np.abs(t) * nx) <= 1e-12 * np.abs(t) * nx + 1e-300)
    assert np.all(m.norm_batch(X + Y) <= nx + m.norm_batch(Y) + 1e-12)


@settings(max_examples=50, deadline=None)
@given(
    coords=st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3),
    t=st.floats(-50, 50, allow_nan=False),
)
def test_homogeneity_property(coords, t):
    m = default_mixed_block()
    x = np.array(coords)
    lhs = m.norm(t * x)
    rhs = abs(t) * m.norm(x)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_batch_agrees_with_scalar():
    rng = sampling.rng_from_seed(13)
    for m in MODELS:
        X = np.stack([sampling.sample_scaled(rng, m.dim) for _ in range(40)])
        X[5] = 0.0
        assert np.allclose(m.norm_batch(X), [m.norm(r) for r in X], rtol=1e-14, atol=1e-300)
        S = m.support_batch(X)
        for i, row in enumerate(X):
            if m.norm(row) == 0.0:
                assert np.all(S[i] == 0.0)
            else:
                assert np.allclose(S[i], m.support(row), rtol=1e-12, atol=1e-15)


def test_finite_support_arithmetic():
    a = FiniteSupportElement({(0, 0): [1.0, 2.0], (1, 3): [0.5, 0.0, 0.5]})
    b = FiniteSupportElement({(0, 0): [-1.0, -2.0], (0, 2): [1.0, 1.0]})
    s = a + b
    assert (0, 0) not in s.entries  # exact cancellation drops the block
    assert s.support == ((0, 2), (1, 3))
    assert (2.0 * a).entries[(0, 0)].tolist() == [2.0, 4.0]
    assert (a - a).is_zero()
    doc = a.to_doc()
    assert FiniteSupportElement.from_doc(doc) == a


def test_finite_support_layout_errors():
    with pytest.raises(LayoutError):
        FiniteSupportElement({(-1, 0): [1.0]})
    with pytest.raises(LayoutError):
        FiniteSupportElement({(0, 0): [[1.0, 2.0]]})
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), length=2),))
    with pytest.raises(LayoutError):
        ss.norm(FiniteSupportElement({(0, 5): [1.0, 0.0]}))  # beyond stream length
    with pytest.raises(LayoutError):
        ss.norm(FiniteSupportElement({(1, 0): [1.0, 0.0]}))  # unknown stream
    with pytest.raises(LayoutError):
        ss.norm(FiniteSupportElement({(0, 0): [1.0]}))  # wrong block dim


def test_exponent_validation():
    for bad in (1.0, 0.5, np.inf):
        with pytest.raises(ConfigError):
            LpNorm(bad, 2)
    with pytest.raises(ConfigError):
        LpNorm(2.0, 0)


def test_flags_all_smooth_strictly_convex():
    for m in MODELS:
        assert m.smooth and m.strictly_convex
    ss = SumSpace(2.5, (SumStream(LpNorm(3, 2), None), SumStream(default_mixed_block(), None)))
    assert ss.smooth and ss.strictly_convex


def test_config_roundtrip():
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), 4, "blocks"),))
    for m in MODELS + [ss]:
        doc = json.loads(json.dumps(model_to_config(m)))
        m2 = model_from_config(doc)
        assert model_to_config(m2) == model_to_config(m)
    with pytest.raises(ConfigError):
        model_from_config({"kind": "no-such-norm"})
    with pytest.raises(ConfigError):
        model_from_config({"kind": "lp"})
