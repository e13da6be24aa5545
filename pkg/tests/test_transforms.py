import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kuznetsov_numerics import transforms as tf
from kuznetsov_numerics.errors import ZeroFunction

V, W = tf.STANDARD_V, tf.STANDARD_W

# scipy.integrate.dblquad on the raw (x, y) integrand, 12 x-strips, epsrel 1e-11
G_REFERENCE = {2.0: 0.21010147715657831, 4 * math.pi: 0.21068674188368328, 20.0: -0.4832725096365405}


@pytest.fixture(scope="module")
def ev():
    return tf.ConvolutionEvaluator(V, W)


@pytest.fixture(scope="module")
def data():
    return tf.SpectralData(V, W)


# ---------------------------------------------------------------- bumps

def test_bump_shape():
    assert V(0.5) == 0 and V(6.0) == 0
    assert V(3.5) == pytest.approx(math.exp(-1 / 6.25))
    np.testing.assert_array_equal(V(np.array([1.0, 6.0, 7.0])), 0)
    assert V.support == (1.0, 6.0)


def test_bump_validation():
    with pytest.raises(ValueError):
        tf.BumpFunction(0.0, 1.0)
    with pytest.raises(ValueError):
        tf.BumpFunction(2.0, 1.0)
    with pytest.raises(ValueError):
        tf.BumpFunction(1.0, 2.0, profile="gaussian")


def test_standard_weight_is_normalized():
    g = tf.standard_weight()
    # scipy.integrate.quad of the raw bump on [1, 2]
    assert g.amplitude == pytest.approx(1 / 0.007029858406609657, rel=1e-12)
    with pytest.raises(ZeroFunction):
        tf.normalize_weight(tf.BumpFunction(1.0, 2.0, amplitude=0.0))


# ---------------------------------------------------------------- h transforms

def test_h_holomorphic_reference():
    # scipy.integrate.quad with scipy.special.jv, times i^k
    assert tf.h_holomorphic(V, 2) == pytest.approx(-0.31893716685437884694, rel=1e-10)
    assert tf.h_holomorphic(V, 4) == pytest.approx(0.29388271683313597112, rel=1e-10)
    assert tf.h_holomorphic(W, 6) == pytest.approx(-0.18800918149124899017, rel=1e-10)


def test_h_maass_reference():
    assert tf.h_maass(V, 1.0) == pytest.approx(-0.091732421303123733451, rel=1e-9)
    assert tf.h_maass(W, 0.3) == pytest.approx(-0.057795985538077627302, rel=1e-9)


def test_h_array_matches_scalar():
    ks = np.array([2, 8, 14])
    np.testing.assert_allclose(tf.h_holomorphic(V, ks), [tf.h_holomorphic(V, int(k)) for k in ks], rtol=1e-9)
    ts = np.array([0.5, -0.5, 3.0])
    out = tf.h_maass(V, ts)
    assert out[0] == out[1]
    assert out[2] == pytest.approx(tf.h_maass(V, 3.0), rel=1e-9)


def test_h_holomorphic_rejects_odd_weight():
    with pytest.raises(ValueError):
        tf.h_holomorphic(V, 3)
    with pytest.raises(ValueError):
        tf.h_holomorphic(V, 0)


def test_zero_function_transforms():
    Z = tf.BumpFunction(1.0, 2.0, amplitude=0.0)
    assert tf.h_holomorphic(Z, 4) == 0
    assert tf.h_maass(Z, 1.0) == 0
    assert tf.ConvolutionEvaluator(Z, W).direct_many([1.0, 2.0]).tolist() == [0.0, 0.0]


def test_h_at_large_parameters():
    ks = np.arange(2, 61, 2)
    assert np.abs(tf.h_holomorphic(V, ks))[-1] < 1e-25
    # mpmath quad with besselj at 25 digits
    assert tf.h_maass(V, 30.0) == pytest.approx(-0.0004070320676754744987858179, rel=1e-7)


def test_mellin_of_power():
    res = tf.mellin(lambda x: np.ones_like(x), 2.0, (1.0, 3.0))
    assert res == pytest.approx(4.0, rel=1e-13)
    with pytest.raises(ValueError):
        tf.mellin(lambda x: x, 1.0, (0.0, 1.0))


def test_diag_inner():
    assert tf.diag_inner(V, W) == pytest.approx(0.65659104111412256758, rel=1e-12)
    assert tf.diag_inner(tf.BumpFunction(1, 2), tf.BumpFunction(3, 4)) == 0.0


# ---------------------------------------------------------------- convolution

@pytest.mark.parametrize("z", sorted(G_REFERENCE))
def test_convolution_adaptive_reference(ev, z):
    assert ev.direct(z).value == pytest.approx(G_REFERENCE[z], abs=1e-9)


def test_convolution_cache(ev):
    assert ev.direct(2.0) is ev.direct(2.0)
    with pytest.raises(ValueError):
        ev.direct(0.0)


def test_batched_route_matches_adaptive(ev):
    zs = list(G_REFERENCE)
    np.testing.assert_allclose(ev.direct_many(zs), [G_REFERENCE[z] for z in zs], atol=1e-9)


def test_batched_route_is_order_independent(ev):
    zs = np.geomspace(0.5, 60, 40)
    a = ev.direct_many(zs)
    b = ev.direct_many(zs[::-1])[::-1]
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_reciprocal_ladder_matches_batched(ev):
    n = np.arange(1, 41)
    np.testing.assert_allclose(ev.reciprocal_ladder(1.0, 40), ev.direct_many(4 * math.pi / n), atol=1e-7)


def test_large_z_asymptotics(ev):
    err = [abs(ev.asymptotic(w)[0] - ev.direct(w).value) for w in (100.0, 400.0)]
    assert err[1] < err[0] < 1e-3


@settings(max_examples=8, deadline=None)
@given(st.floats(0.3, 40.0))
def test_convolution_is_symmetric_in_factors(z):
    a = tf.ConvolutionEvaluator(V, W).direct_many([z])[0]
    b = tf.ConvolutionEvaluator(W, V).direct_many([z])[0]
    assert a == pytest.approx(b, abs=1e-9)


# ---------------------------------------------------------------- spectral side

@pytest.mark.parametrize("z", sorted(G_REFERENCE))
def test_calibrated_spectral_expansion(ev, data, z):
    val = tf.convolve_spectral(ev, z, "calibrated", data=data).value
    assert val == pytest.approx(G_REFERENCE[z], abs=1e-5)


def test_stated_constants_do_not_reproduce_convolution(ev, data):
    val = tf.convolve_spectral(ev, 2.0, "stated", data=data).value
    assert abs(val - G_REFERENCE[2.0]) > 0.1


def test_normalization_table():
    n = tf.NORMALIZATIONS["calibrated"]
    assert n.continuous_factor == pytest.approx(8 * math.pi)
    assert n.discrete_factor == pytest.approx(4 * math.pi)
    assert n.ik_phase and not tf.NORMALIZATIONS["stated"].ik_phase


def test_sears_reconstruction_phase():
    x = np.linspace(1.2, 5.8, 12)
    good = np.abs(tf.sears_reconstruct(V, x) - V(x)).max()
    literal = np.abs(tf.sears_reconstruct(V, x, literal_phase=True) - V(x)).max()
    assert good < 0.05
    assert literal > 10 * good


def test_diagonal_inner_product_identity():
    lhs, rhs = tf.pr5_check(V, W)
    assert abs(lhs - rhs) <= 1e-4 * abs(lhs)
    lhs, sym = tf.pr5_check(V, W, symmetric=True)
    assert sym == pytest.approx(rhs, rel=1e-9)


def test_t_rule_is_exact_on_polynomials():
    t, w = tf.t_rule(10.0)
    assert np.sum(w * t**5) == pytest.approx(1e6 / 6, rel=1e-13)
