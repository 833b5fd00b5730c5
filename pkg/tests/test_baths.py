import math

import numpy as np
import pytest
from scipy.integrate import quad

from dephasing_ree.baths import (DEFAULT_KBT, BathSpec, QuadratureError, alpha, build_kernel,
                                 dephasing_rate, markov_kernel, markov_rate, rates,
                                 spectral_density, write_kernel_csv)

SPEC = BathSpec()
G0 = markov_rate(SPEC)
T_MAX = 5.0 / G0


def rate_oracle(t, spec=SPEC):
    """gamma(t) from scipy's oscillatory-weight quadrature.

    coth(x) = 1/x + (coth x - 1/x): the pole part integrates in closed form to
    4 eta kT arctan(Lambda t); the smooth remainder goes to QAWO on
    [0, 60 Lambda] (the neglected tail is below exp(-60)).
    """
    if t == 0:
        return 0.0
    kt, eta, lam = spec.kbt, spec.eta, spec.lambda_cut

    def smooth(w):
        x = w / (2 * kt)
        reg = x / 3 if x < 1e-4 else 1 / math.tanh(x) - 1 / x
        return 2 * eta * math.exp(-w / lam) * reg

    val, _ = quad(smooth, 0, 60 * lam, weight="sin", wvar=t, epsabs=1e-17, epsrel=1e-11, limit=500)
    return 4 * eta * kt * math.atan(lam * t) + val


def test_spectral_density_examples():
    assert spectral_density(0.0, SPEC) == 0.0
    assert spectral_density(0.01, SPEC) == pytest.approx(1e-3 / math.e, rel=1e-14)
    w = np.linspace(0.001, 0.05, 2001)
    assert w[np.argmax(spectral_density(w, SPEC))] == pytest.approx(0.01, abs=3e-5)
    with pytest.raises(ValueError):
        spectral_density(-1.0, SPEC)


def test_bath_spec_validation():
    with pytest.raises(ValueError):
        BathSpec(eta=-0.1)
    with pytest.raises(ValueError):
        BathSpec(topology="shared")


def test_markov_rate():
    assert markov_rate(SPEC) == pytest.approx(0.1, rel=1e-15)
    hot = BathSpec(kbt=2 * DEFAULT_KBT)
    assert markov_rate(hot) == pytest.approx(2 * markov_rate(SPEC), rel=1e-15)
    # linear in eta, so it vanishes with the coupling
    assert markov_rate(BathSpec(eta=1e-12)) == pytest.approx(1e-12, rel=1e-12)


def test_rate_at_zero():
    assert dephasing_rate(0.0, SPEC) == 0.0
    assert alpha(0.0, SPEC) == 0j


def test_rate_against_quad_oracle():
    for t in (0.5, 3.0, 17.0, 80.0, 250.0, 1000.0):
        assert dephasing_rate(t, SPEC) == pytest.approx(rate_oracle(t), rel=1e-9, abs=1e-14)


def test_rate_other_parameters():
    spec = BathSpec(eta=0.3, lambda_cut=0.2, kbt=0.05)
    for t in (1.0, 10.0, 40.0):
        assert dephasing_rate(t, spec) == pytest.approx(rate_oracle(t, spec), rel=1e-9)


def test_rate_linear_in_eta():
    t = np.linspace(0, T_MAX, 37)
    g1, _ = rates(t, SPEC)
    g2, _ = rates(t, BathSpec(eta=0.2))
    assert np.allclose(g2, 2 * g1, rtol=1e-12, atol=0)


def test_rate_long_time_limit():
    """gamma(t) -> 2 pi eta kT as t -> inf.

    The integral as written saturates at half of 4 pi eta kT; the next term
    is -4 eta kT / (Lambda t) from the arctan pole part.
    """
    t = 1e4
    limit = 2 * math.pi * SPEC.eta * SPEC.kbt
    expected = limit - 4 * SPEC.eta * SPEC.kbt / (SPEC.lambda_cut * t)
    g = dephasing_rate(t, SPEC)
    assert g == pytest.approx(rate_oracle(t), rel=1e-8)
    assert g == pytest.approx(expected, rel=1e-6)
    assert limit == pytest.approx(0.5 * G0, rel=1e-15)


def test_alpha_identities():
    t = np.linspace(0, T_MAX, 50)
    g, a = rates(t, SPEC)
    assert np.max(np.abs(a.real - g / 2)) < 1e-8
    assert np.all(a.imag <= 0)
    # Im alpha = -int eta exp(-w/L) (1 - cos wt) dw in closed form
    lam = SPEC.lambda_cut
    exact = -SPEC.eta * lam**3 * t**2 / (1 + (lam * t) ** 2)
    assert np.allclose(a.imag, exact, rtol=1e-10, atol=1e-16)


def test_rate_positive_on_default_grid():
    # empirical check for the default regime, not a theorem
    k = build_kernel(SPEC, T_MAX, 501)
    assert np.all(k.gamma >= 0)


def test_kernel_endpoints_and_identities():
    k = build_kernel(SPEC, T_MAX, 501)
    assert k.gamma_int[0] == 0 and k.a_int[0] == 0
    assert np.max(np.abs(k.a_int.real - k.gamma_int / 2)) < 1e-8
    assert np.all(np.diff(k.gamma_int) >= 0)
    with pytest.raises(ValueError):
        k.integrals(2 * T_MAX)
    assert not k.t.flags.writeable


def test_kernel_against_double_quadrature():
    k = build_kernel(SPEC, T_MAX, 501)
    spots = np.linspace(0.37, T_MAX * 0.97, 10)  # off-grid
    gam, a = k.integrals(spots)
    for t, g in zip(spots, gam):
        ref, _ = quad(rate_oracle, 0, t, epsabs=0, epsrel=1e-11, limit=200)
        assert g == pytest.approx(ref, rel=1e-6)
    lam = SPEC.lambda_cut
    im_exact = -SPEC.eta * (lam * spots - np.arctan(lam * spots))
    assert np.allclose(a.imag, im_exact, rtol=1e-6, atol=1e-14)


def test_kernel_interpolation_off_grid():
    k = build_kernel(SPEC, T_MAX, 501)
    fine = build_kernel(SPEC, T_MAX, 1001)
    mid = fine.t[1::2]
    gam, a = k.integrals(mid)
    assert np.max(np.abs(gam - fine.gamma_int[1::2]) / fine.gamma_int[1::2]) < 1e-6
    im_ref = fine.a_int.imag[1::2]
    assert np.max(np.abs(a.imag - im_ref) / np.abs(im_ref)) < 1e-6


def test_markov_kernel():
    k = markov_kernel(SPEC, T_MAX, 11)
    t = np.array([0.0, 1.3, 20.0, T_MAX])
    gam, a = k.integrals(t)
    assert np.array_equal(gam, G0 * t)
    assert np.array_equal(a, 0.5 * G0 * t + 0j)


def test_kernel_validation():
    with pytest.raises(ValueError):
        build_kernel(SPEC, T_MAX, 1)
    with pytest.raises(ValueError):
        build_kernel(SPEC, -1.0, 10)


def test_quadrature_error_reports_estimate():
    err = QuadratureError("no luck", 3.5e-4)
    assert err.error_estimate == 3.5e-4
    assert "3.500e-04" in str(err)


def test_kernel_csv(tmp_path):
    k = build_kernel(SPEC, T_MAX, 21)
    path = tmp_path / "kernel.csv"
    write_kernel_csv(k, path)
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "t,gamma,re_alpha,im_alpha,Gamma_int,re_A,im_A"
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines
                     if not ln.startswith("#") and ln != header])
    assert data.shape == (21, 7)
    assert np.allclose(data[:, 4], k.gamma_int, rtol=1e-11)
