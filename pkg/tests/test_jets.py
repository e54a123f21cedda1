import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_lab import jets
from finsler_lab.errors import JetError
from finsler_lab.jets import Jet, jet_space, s_space, seed_variable

S6 = s_space(6)


def s_jet(value=0.0, space=S6):
    return seed_variable(0, value, space)


def central_fd(f, t, order, h):
    # stencils for derivatives 2 and 4
    if order == 2:
        return (f(t + h) - 2 * f(t) + f(t - h)) / h ** 2
    if order == 4:
        return (f(t + 2 * h) - 4 * f(t + h) + 6 * f(t) - 4 * f(t - h) + f(t - 2 * h)) / h ** 4
    raise ValueError(order)


def test_product_coefficient():
    s = s_jet()
    assert ((1 + s) * (1 - s)).coefficient([2]) == -1.0


def test_geometric_series():
    s = s_jet()
    g = 1 / (1 - s)
    assert [g.coefficient([k]) for k in range(4)] == [1.0, 1.0, 1.0, 1.0]
    assert g.partial([3]) == 6.0


def test_sqrt_one_plus_s2_against_fd():
    s = s_jet()
    J = jets.sqrt(1 + s * s)
    assert J.coefficient([2]) == pytest.approx(0.5, abs=1e-15)
    fd = central_fd(lambda t: math.sqrt(1 + t * t), 0.0, 2, 1e-4)
    assert J.partial([2]) == pytest.approx(fd, abs=1e-7)


def test_sqrt_one_plus_s2_fourth_partial():
    # binomial series: sqrt(1+z) = 1 + z/2 - z^2/8 + ..., z = s^2, so s^4 coefficient -1/8, times 4! = -3
    s = s_jet()
    assert jets.sqrt(1 + s * s).partial([4]) == pytest.approx(-3.0, abs=1e-13)


def test_constant_jet_partials_vanish():
    c = Jet.constant(2.5, S6)
    assert c.value == 2.5
    assert all(c.partial([k]) == 0.0 for k in range(1, 7))


def test_order_not_tracked():
    with pytest.raises(JetError, match="order not tracked"):
        s_jet().partial([7])


def test_division_singular():
    with pytest.raises(JetError, match="jet division singular"):
        1 / s_jet(0.0)


@pytest.mark.parametrize("fn", [jets.sqrt, jets.log])
@pytest.mark.parametrize("value", [0.0, -1.0])
def test_domain_errors(fn, value):
    with pytest.raises(JetError, match="jet domain error"):
        fn(s_jet(value))


def test_mismatched_caps():
    with pytest.raises(JetError, match="jet caps differ"):
        s_jet() + seed_variable(0, 0.0, s_space(3))


def test_seed_under_zero_cap():
    sp = jet_space((1, 0), (1, 2))
    with pytest.raises(JetError, match="not differentiable"):
        seed_variable(0, 1.0, sp)


def test_exp_log_roundtrip():
    s = s_jet(0.3)
    J = jets.log(jets.exp(s))
    assert np.allclose(J.coeffs, s.coeffs, atol=1e-15)


def test_mixed_caps_rs():
    sp = jets.rs_space()
    r = seed_variable(0, 0.5, sp)
    s = seed_variable(1, 0.2, sp)
    f = r * r * s ** 3
    # d^2/dr^2 d^3/ds^3 of r^2 s^3 = 2 * 6
    assert f.partial([2, 3]) == pytest.approx(12.0)
    assert f.partial([1, 2]) == pytest.approx(2 * 0.5 * 6 * 0.2)
    with pytest.raises(JetError):
        f.partial([3, 0])


def test_diff_and_section():
    sp = jets.rs_space()
    r = seed_variable(0, 0.5, sp)
    s = seed_variable(1, 0.2, sp)
    f = jets.sqrt(1 + r * s * s)
    fs = f.diff(1)
    assert fs.partial([1, 2]) == pytest.approx(f.partial([1, 3]), abs=1e-13)
    sec = f.section(s_space(6), keep=(1,), orders={0: 1})
    assert sec.partial([2]) == pytest.approx(f.partial([1, 2]), abs=1e-13)


def _fd_mixed(f, x, i, j, h=1e-4):
    e_i, e_j = np.eye(len(x))[i] * h, np.eye(len(x))[j] * h
    return (f(x + e_i + e_j) - f(x + e_i - e_j) - f(x - e_i + e_j) + f(x - e_i - e_j)) / (4 * h * h)


def test_multivariate_mixed_partial_against_fd():
    sp = jet_space((3, 3))
    x0 = np.array([0.3, -0.2, 0.7])

    def f(v):
        return v[0] * jets.exp(v[1]) / jets.sqrt(1 + v[2] * v[2])

    J = f(jets.seed_all(x0, sp))
    for i, j in [(0, 1), (1, 2), (0, 2), (1, 1)]:
        assert J.partial_unit(i, j) == pytest.approx(_fd_mixed(f, x0, i, j), abs=1e-6)


# ----------------------------------------------------------------------------- properties

coef = st.floats(-3, 3, allow_nan=False)
SP2 = jet_space((2, 4))


def random_poly(cs, space):
    """sum_k c_k x^a y^b over a fixed monomial list, built by jet arithmetic."""
    x = seed_variable(0, 0.4, space)
    y = seed_variable(1, -0.3, space)
    monos = [(0, 0), (1, 0), (0, 1), (2, 1), (1, 2), (3, 0), (2, 2)]
    out = Jet.constant(0.0, space)
    for c, (a, b) in zip(cs, monos):
        out = out + c * x ** a * y ** b if (a or b) else out + c
    return out, monos


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=7, max_size=7))
def test_random_polynomial_partials(cs):
    J, monos = random_poly(cs, SP2)
    x0, y0 = 0.4, -0.3
    for i, j in [(1, 0), (0, 1), (1, 1), (2, 1), (0, 2), (2, 2)]:
        exact = 0.0
        for c, (a, b) in zip(cs, monos):
            if a >= i and b >= j:
                exact += (c * math.perm(a, i) * math.perm(b, j) * x0 ** (a - i) * y0 ** (b - j))
        assert J.partial([i, j]) == pytest.approx(exact, rel=1e-13, abs=1e-13)


def _jet_from(cs, space):
    return Jet(space, np.array(cs[: space.size] + [0.0] * max(0, space.size - len(cs))))


jet_coeffs = st.lists(coef, min_size=SP2.size, max_size=SP2.size)


@settings(max_examples=40, deadline=None)
@given(jet_coeffs, jet_coeffs, jet_coeffs)
def test_mul_associative_commutative(a, b, c):
    A, B, C = (_jet_from(v, SP2) for v in (a, b, c))
    left = ((A * B) * C).coeffs
    right = (A * (B * C)).coeffs
    scale = 1 + np.max(np.abs(left))
    assert np.max(np.abs(left - right)) <= 1e-13 * scale
    assert np.max(np.abs((A * B).coeffs - (B * A).coeffs)) <= 1e-13 * scale
    assert np.max(np.abs(((A + B) + C).coeffs - (A + (B + C)).coeffs)) <= 1e-13 * scale


@settings(max_examples=30, deadline=None)
@given(jet_coeffs, jet_coeffs)
def test_leibniz(a, b):
    A, B = _jet_from(a, SP2), _jet_from(b, SP2)
    AB = A * B
    for i in range(4):
        for j in range(4 - i):
            expected = sum(math.comb(i, p) * math.comb(j, q) * A.partial([p, q]) * B.partial([i - p, j - q])
                           for p in range(i + 1) for q in range(j + 1))
            assert AB.partial([i, j]) == pytest.approx(expected, rel=1e-12, abs=1e-11)


@pytest.mark.skipif("compiled" not in jets.available_backends(), reason="extension not built")
def test_backends_bit_identical():
    rng = np.random.default_rng(3)
    sp = jets.xy_space(4, 1, 5)
    a = Jet(sp, rng.standard_normal(sp.size))
    b = Jet(sp, rng.standard_normal(sp.size))
    prev = jets.set_backend("python")
    try:
        slow = (a * b).coeffs
        jets.set_backend("compiled")
        fast = (a * b).coeffs
    finally:
        jets.set_backend(prev)
    assert np.array_equal(slow, fast)


def test_unknown_backend():
    with pytest.raises(ValueError):
        jets.set_backend("gpu")
