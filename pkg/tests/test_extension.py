import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holderlevels import errors
from holderlevels.holder import (GridFunction, HolderSample, Mollifier, holder_constant, mcshane_extend,
                                 mcshane_grid, mollify)


def seeded_sample(seed, n, p=2, alpha=0.5, c=1.0):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, p))
    vals = rng.random(n)
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    np.fill_diagonal(d, 1.0)
    q = np.max(np.abs(vals[:, None] - vals[None]) / d ** alpha)
    return HolderSample(pts, vals * min(1.0, c / q), alpha, c)


def test_linear_case():
    s = HolderSample([[0.0], [1.0]], [0.0, 1.0], 1.0, 1.0)
    assert mcshane_extend(s, [0.5]) == 0.5


def test_square_root_case():
    s = HolderSample([[0.0], [1.0]], [0.0, 1.0], 0.5, 1.0)
    assert mcshane_extend(s, [0.25]) == 0.5


@pytest.mark.parametrize("seed", range(5))
def test_identity_on_sample(seed):
    s = seeded_sample(seed, 30)
    assert np.array_equal(mcshane_extend(s, s.points), s.values)


def test_formula_against_direct_min():
    s = seeded_sample(7, 12, p=3, alpha=0.8)
    q = np.random.default_rng(1).random((50, 3))
    want = [min(v + s.c * np.linalg.norm(x - y) ** s.alpha for y, v in zip(s.points, s.values)) for x in q]
    assert np.allclose(mcshane_extend(s, q), want, rtol=0, atol=1e-14)


@given(st.integers(0, 10 ** 6), st.sampled_from([0.3, 0.5, 0.8, 1.0]), st.integers(2, 20))
@settings(max_examples=25, deadline=None)
def test_extension_keeps_constant(seed, alpha, n):
    s = seeded_sample(seed, n, alpha=alpha, c=1.3)
    q = np.random.default_rng(seed + 1).random((300, 2))
    vals = mcshane_extend(s, q)
    pts = np.vstack([q, s.points])
    allv = np.concatenate([vals, s.values])
    assert float(holder_constant((pts, allv), alpha)) <= s.c + 1e-9


def test_grid_extension_agrees_with_queries():
    s = seeded_sample(3, 10)
    g = mcshane_grid(s, 4)
    assert np.allclose(g.values.ravel(), mcshane_extend(s, g.coords().reshape(-1, 2)))


def test_bump_normalization_matches_radial_quadrature():
    m = Mollifier(0.1, 0.1 / 16, 2)
    assert m.normalization == pytest.approx(m.normalization_exact(), rel=1e-6)
    assert m.weight_sum() == pytest.approx(1.0, abs=1e-14)


def test_underresolved_kernel():
    with pytest.raises(errors.UnderResolvedKernel):
        Mollifier(0.01, 0.01, 2)


def test_mollify_constant_is_fixed():
    f = GridFunction(np.full((33, 33), 2.25), 0.5, 1.0)
    assert np.allclose(mollify(f, 0.1).values, 2.25, atol=1e-14)


def test_mollify_linear_centre():
    f = GridFunction.from_callable(lambda x: x[:, 0], 1, 10)
    out = mollify(f, 0.1)
    assert out.values[512] == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.4, 0.7, 1.0])
def test_mollify_keeps_constant_and_stays_close(alpha):
    s = seeded_sample(11, 25, alpha=alpha)
    f = mcshane_grid(s, 7)
    r = 0.05
    g = mollify(f, r)
    assert float(holder_constant(g, alpha, pair_budget=10 ** 9)) <= float(holder_constant(f, alpha,
                                                                                          pair_budget=10 ** 9)) + 1e-6
    reach = math.ceil(r * 128)
    inner = (slice(reach, -reach),) * 2
    assert np.max(np.abs(g.values[inner] - f.values[inner])) <= s.c * r ** alpha


def test_mollify_dimension_mismatch():
    f = GridFunction(np.zeros((17, 17)))
    with pytest.raises(errors.InvalidArgument):
        mollify(f, Mollifier(0.25, 1 / 16, 1))
