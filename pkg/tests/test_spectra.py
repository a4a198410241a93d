import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmvloc.cmv import BoundaryPair, build_restriction, char_det_lu
from cmvloc.errors import CmvError
from cmvloc.spectra import (EigenPair, SpectralWindow, approx_eigen_match, eigensolve, eigenvalues, eigenvectors,
                            jacobi_hermitian, matching_distance, resultant_floor_check, resultant_window,
                            root_resultant, separation, spectrum_csv, sylvester_resultant, weierstrass_split)

from conftest import localized_field, omega2, random_field, random_omega


def block(n, x=(0.1, 0.27), bd=BoundaryPair(1j, -1)):
    return build_restriction(localized_field(), omega2(), x, 0, n - 1, bd)


def pairs(values):
    return [EigenPair(complex(v), np.eye(len(values))[i].astype(complex), 0.0) for i, v in enumerate(values)]


def test_single_site():
    r = block(1)
    e = eigensolve(r)
    assert len(e) == 1 and e[0].value == r.dense()[0, 0] and e[0].residual == 0


def test_eigensolve_invariants():
    rng = np.random.default_rng(2)
    r = block(30)
    eigs = eigensolve(r)
    z = eigenvalues(eigs)
    V = eigenvectors(eigs)
    assert len(eigs) == 30
    assert np.max(np.abs(np.abs(z) - 1)) <= 1e-10
    assert np.max(np.abs(np.linalg.norm(V, axis=0) - 1)) <= 1e-12
    assert np.max(np.abs(V.conj().T @ V - np.eye(30))) <= 1e-8
    assert max(e.residual for e in eigs) <= 1e-8
    assert all(a.theta <= b.theta for a, b in zip(eigs, eigs[1:]))
    for _ in range(5):
        p = complex(rng.normal(), rng.normal())
        d = char_det_lu(r, p)
        assert abs(np.prod(p - z) - d.value) / abs(d.value) <= 1e-8


def test_eigensolve_vs_numpy():
    rng = np.random.default_rng(12)
    for _ in range(10):
        f = random_field(rng)
        r = build_restriction(f, random_omega(rng, f.d), tuple(rng.uniform(size=f.d)), 0, int(rng.integers(2, 60)),
                              BoundaryPair(np.exp(1j * rng.uniform(0, 6)), 1))
        ours = eigenvalues(eigensolve(r, seed=int(rng.integers(100))))
        ref = np.linalg.eigvals(r.dense())
        assert matching_distance(ours, ref) <= 1e-10


def test_eigensolve_deterministic():
    a, b = eigensolve(block(40), seed=3), eigensolve(block(40), seed=3)
    assert all(x.value == y.value and np.array_equal(x.vector, y.vector) for x, y in zip(a, b))


def test_jacobi_hermitian():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    A = A + A.conj().T
    w, V, _ = jacobi_hermitian(A.copy())
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-12)
    assert np.allclose(A @ V, V * w, atol=1e-11)


def test_separation_examples():
    assert separation(pairs([1, -1]), 0) == 2
    assert separation(pairs([1j, 1j, -1]), 0) == 0
    rng = np.random.default_rng(1)
    z = np.exp(2j * np.pi * rng.uniform(size=15))
    ps = pairs(z)
    for j in range(15):
        brute = min(abs(z[j] - z[k]) for k in range(15) if k != j)
        assert separation(ps, j) == pytest.approx(brute, rel=1e-15)


def test_resultant_window_examples():
    e = eigensolve(block(12))
    w = SpectralWindow(1.0 + 0j, 3.0, ())
    assert resultant_window(e, e, w).log_modulus == -math.inf
    empty = SpectralWindow(10.0 + 0j, 0.1, ())
    r = resultant_window(e, e, empty)
    assert r.log_modulus == 0 and r.phase == 1
    one = resultant_window(pairs([1.0]), pairs([1j]), SpectralWindow(0j, 2.0, ()))
    assert math.exp(one.log_modulus) == pytest.approx(math.sqrt(2))


def test_resultant_routes_agree():
    rng = np.random.default_rng(5)
    for _ in range(20):
        f = np.poly(0.5 * rng.uniform(size=3) * np.exp(2j * np.pi * rng.uniform(size=3)))
        g = np.poly(0.5 * rng.uniform(size=2) * np.exp(2j * np.pi * rng.uniform(size=2)))
        a, b = root_resultant(f, g), sylvester_resultant(f, g)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_resultant_floor_examples():
    f = np.array([1.0, -0.2])
    assert not resultant_floor_check(f, f, 0.3).applies
    r = resultant_floor_check(np.array([1.0, 0.0]), np.array([1.0, -0.4]), 0.3)
    assert r.applies and r.s == 1 and r.min_max >= 0.2 > r.floor and r.holds
    with pytest.raises(CmvError):
        resultant_floor_check(np.array([1.0, -0.9]), np.array([1.0, 0.0]), 0.3)
    with pytest.raises(CmvError):
        resultant_floor_check(f, f, 1.5)


def test_resultant_floor_random():
    rng = np.random.default_rng(6)
    for _ in range(100):
        f = np.poly(0.5 * rng.uniform(size=3) * np.exp(2j * np.pi * rng.uniform(size=3)))
        g = np.poly(0.5 * rng.uniform(size=3) * np.exp(2j * np.pi * rng.uniform(size=3)))
        assert resultant_floor_check(f, g, float(rng.uniform(0.001, 0.99))).holds


def test_weierstrass_split():
    r = block(25)
    e = eigensolve(r)
    z = np.exp(0.123j)
    d = char_det_lu(r, z)
    logP, logG = weierstrass_split(r, SpectralWindow(z, 1e-9, ()), z, e)
    assert logP == 0 and logG == pytest.approx(d.log_modulus)
    logP, logG = weierstrass_split(r, SpectralWindow(z, 3.0, ()), z, e)
    assert abs(logG) <= 1e-9
    logP, logG = weierstrass_split(r, SpectralWindow(z, 0.5, ()), z, e)
    assert abs(math.exp(logP + logG) - math.exp(d.log_modulus)) / math.exp(d.log_modulus) <= 1e-9


def test_approx_match_exact_vector():
    r = block(20)
    e = eigensolve(r)
    m = approx_eigen_match(r, e[7].vector, e[7].value, e)
    assert m.index == 7 and m.eps_tilde <= 1e-10 and m.overlap == pytest.approx(1)


def test_approx_match_two_vectors():
    r = block(20)
    e = eigensolve(r)
    phi = (e[3].vector + e[11].vector) / math.sqrt(2)
    z = e[3].value
    m = approx_eigen_match(r, phi, z, e)
    assert m.eps_tilde == pytest.approx(abs(e[11].value - z) / math.sqrt(2), rel=1e-8)
    assert m.part_a and m.index in (3, 11)


def test_approx_match_random():
    rng = np.random.default_rng(7)
    r = block(25)
    e = eigensolve(r)
    for _ in range(1000):
        phi = rng.normal(size=25) + 1j * rng.normal(size=25)
        phi /= np.linalg.norm(phi)
        z = complex(np.exp(2j * np.pi * rng.uniform()))
        assert approx_eigen_match(r, phi, z, e).part_a


def test_approx_match_part_b():
    r = block(20)
    e = eigensolve(r)
    phi = e[5].vector + 1e-4 * e[6].vector
    phi /= np.linalg.norm(phi)
    m = approx_eigen_match(r, phi, e[5].value, e, eps_hat=0.5 * separation(e, 5))
    assert m.window_count == 1 and m.part_b


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 2 * np.pi), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_matching_distance_permutation(ts, rnd):
    z = np.exp(1j * np.array(ts))
    perm = list(range(len(z)))
    rnd.shuffle(perm)
    assert matching_distance(z, z[perm]) == 0


def test_matching_distance_brute():
    from itertools import permutations
    rng = np.random.default_rng(3)
    for _ in range(10):
        a, b = np.exp(2j * np.pi * rng.uniform(size=5)), np.exp(2j * np.pi * rng.uniform(size=5))
        brute = min(max(abs(a[i] - b[p[i]]) for i in range(5)) for p in permutations(range(5)))
        assert matching_distance(a, b) == pytest.approx(brute)


def test_spectrum_csv():
    text = spectrum_csv(eigensolve(block(5)))
    assert text.splitlines()[0] == "index,theta,re_z,im_z,residual" and len(text.splitlines()) == 6
