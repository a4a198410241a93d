import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmvloc.cocycle import (C_A, LdtExponents, Scaled2x2, conjugate_sl2r, finite_lyapunov, log_norms,
                            lyapunov_ap, monodromy_batch, one_step, spectral_norm, transfer)
from cmvloc.errors import CmvError
from cmvloc.field import VerblunskyField
from cmvloc.torus import phase_grid_array

from conftest import golden, localized_field, omega2

disk = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.99), st.floats(0, 2 * np.pi))
circle = st.builds(lambda t: complex(np.exp(1j * t)), st.floats(0, 2 * np.pi))


def test_one_step_zero():
    t = 1.3
    m = one_step(0.0, np.exp(1j * t)).matrix()
    assert np.allclose(m, np.diag([np.exp(0.5j * t), np.exp(-0.5j * t)]))
    assert spectral_norm(m) == pytest.approx(1.0)


def test_one_step_constant():
    m = one_step(0.6, 1.0).matrix()
    assert np.allclose(m, [[1.25, -0.75], [-0.75, 1.25]])
    n = spectral_norm(m)
    assert n == pytest.approx(2.0)
    assert n + 1 / n == pytest.approx(2 / math.sqrt(1 - 0.36))


def test_one_step_needs_unimodular():
    with pytest.raises(CmvError):
        one_step(0.1, 1.1)


@settings(max_examples=200, deadline=None)
@given(disk, circle)
def test_step_det_and_realness(a, z):
    m = one_step(a, z)
    lm, ph = m.log_det()
    assert abs(np.exp(lm) * ph - 1) <= 1e-10
    assert 0.5 <= np.max(np.abs(m.entries)) < 1
    assert conjugate_sl2r(m).imag_residue <= 1e-12


def test_conjugate_examples():
    assert np.allclose(conjugate_sl2r(one_step(0.0, 1.0)).matrix * np.exp(one_step(0.0, 1.0).log_scale), np.eye(2))
    m = one_step(0.6, 1.0)
    assert np.trace(conjugate_sl2r(m).matrix) * np.exp(m.log_scale) == pytest.approx(2.5)


def test_conjugate_rejects_non_su11():
    with pytest.raises(CmvError) as exc:
        conjugate_sl2r(Scaled2x2.of(np.array([[1j, 0], [0, 1.0]])))
    assert exc.value.code == "not-su11"


def test_transfer_examples():
    om = golden()
    assert transfer(VerblunskyField.zero(), om, np.exp(0.7j), 0.1, 10).log_norm == pytest.approx(0, abs=1e-14)
    assert transfer(VerblunskyField.constant(0.6), om, 1.0, 0.1, 20).log_norm / 20 == pytest.approx(math.log(2), abs=0.02)


def test_cocycle_identity():
    f, om = localized_field(), omega2()
    z, x = np.exp(2.1j), (0.3, 0.6)
    n1, n2 = 13, 21
    full = transfer(f, om, z, x, n1 + n2)
    x1 = tuple(np.mod(np.add(x, n1 * om.vector), 1))
    comp = transfer(f, om, z, x1, n2) @ transfer(f, om, z, x, n1)
    a, b = full.matrix(), comp.matrix()
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) <= 1e-10


def test_transfer_no_overflow():
    m = transfer(VerblunskyField.constant(0.99), golden(), 1.0, 0.0, 5000)
    assert math.isfinite(m.log_norm) and m.log_norm > 1000


def test_monodromy_rejects_bad_alpha():
    with pytest.raises(CmvError):
        monodromy_batch(np.array([[0.2, 1.0]]), 1.0)


def test_finite_lyapunov():
    om = golden()
    xs = phase_grid_array(1, 300)
    e0 = finite_lyapunov(VerblunskyField.zero(), om, np.exp(0.4j), 50, xs)
    assert e0.value == 0 and e0.std_error == 0
    e = finite_lyapunov(VerblunskyField.constant(0.6), om, 1.0, 100, xs)
    assert abs(e.value - math.log(2)) <= max(3 * e.std_error, 1e-12)
    f, om2 = localized_field(), omega2()
    xs2 = phase_grid_array(2, 400, seed=2)
    a = finite_lyapunov(f, om2, np.exp(1j), 16, xs2)
    b = finite_lyapunov(f, om2, np.exp(1j), 32, xs2)
    assert b.value <= a.value + 3 * math.hypot(a.std_error, b.std_error)
    assert a.gamma_floor == max(0.0, a.value - 3 * a.std_error)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), circle)
def test_pointwise_subadditivity(n, m, z):
    f, om = localized_field(), omega2()
    xs = phase_grid_array(2, 50, seed=n * 31 + m)
    lhs = log_norms(f, om, z, xs, n + m)
    rhs = log_norms(f, om, z, xs, n) + log_norms(f, om, z, xs, m, start=n)
    assert np.all(lhs <= rhs + 1e-9)


def test_ap_constant_blocks():
    r = lyapunov_ap(VerblunskyField.constant(0.6), golden(), 1.0, 10, 8, 0.2)
    assert r.within_bound
    assert r.difference < C_A * 8 * math.exp(-10 * math.log(2))


def test_ap_two_blocks_exact():
    r = lyapunov_ap(VerblunskyField.constant(0.6), golden(), 1.0, 10, 2, 0.0)
    assert r.difference <= 1e-12


def test_ap_zero_rejected():
    with pytest.raises(CmvError) as exc:
        lyapunov_ap(VerblunskyField.zero(), golden(), 1.0, 10, 8, 0.0)
    assert exc.value.code == "ap-hypothesis-violated"
    assert exc.value.details["failures"][0]["condition"] == "AP-1"


def test_exponent_ranges():
    with pytest.raises(CmvError):
        LdtExponents(tau=1.5)
