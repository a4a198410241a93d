"""Acceptance criteria, each at its stated tolerance.  Every test prints one PASS/FAIL line."""
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import cmvloc
from cmvloc import config as cfgmod
from cmvloc.cmv import (BoundaryPair, build_restriction, char_det_lu, char_det_transfer,
                        determinant_recursion, greens_entry, greens_ratio, poisson_residual)
from cmvloc.cocycle import (conjugate_sl2r, finite_lyapunov, log_norms, lyapunov_ap, one_step,
                            spectral_norm, transfer)
from cmvloc.errors import CmvError
from cmvloc.experiments import run as run_experiment
from cmvloc.field import VerblunskyField, truncate
from cmvloc.lab import (LyapunovCache, centered_cover, covering_certificate,
                        ldt_tail, scale_continuation)
from cmvloc.cocycle import LdtExponents
from cmvloc.spectra import eigensolve, eigenvalues, log_product, matching_distance
from cmvloc.torus import phase_grid_array

from conftest import golden, localized_field, omega2, random_field, random_omega

CONFIGS = Path(cmvloc.__file__).parent / "data" / "configs"


def _unit(rng):
    return complex(np.exp(2j * np.pi * rng.uniform()))


def test_identity_suite(record):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst = dict(det=0.0, norm=0.0, imag=0.0, unitary=0.0, relation=0.0, recursion=0.0, green=0.0, poisson=0.0)
    for _ in range(200):
        f = random_field(rng)
        om = random_omega(rng, f.d)
        x = tuple(rng.uniform(size=f.d))
        z = _unit(rng)
        n = int(rng.integers(2, 61))
        bd = BoundaryPair(_unit(rng), _unit(rng))
        a = complex(f.values(np.array(x))[0])
        m = one_step(a, z)
        logdet, ph = m.log_det()
        worst["det"] = max(worst["det"], abs(np.exp(logdet) * ph - 1))
        mat = m.matrix()
        nm = spectral_norm(mat)
        worst["norm"] = max(worst["norm"], abs(nm + 1 / nm - 2 / math.sqrt(1 - abs(a) ** 2)))
        worst["imag"] = max(worst["imag"], conjugate_sl2r(m).imag_residue,
                            conjugate_sl2r(transfer(f, om, z, x, n)).imag_residue)
        r = build_restriction(f, om, x, 0, n - 1, bd)
        worst["unitary"] = max(worst["unitary"], r.unitarity_defect)
        d1, d2 = char_det_lu(r, z), char_det_transfer(f, om, z, x, n, bd)
        worst["relation"] = max(worst["relation"], abs(d1.value - d2.value) / abs(d1.value))
        worst["recursion"] = max(worst["recursion"], determinant_recursion(r, z).residual)
        j = int(rng.integers(0, n))
        k = int(rng.integers(j, n))
        g = abs(greens_entry(r, j, k, z))
        worst["green"] = max(worst["green"], abs(g - greens_ratio(r, j, k, z)) / g)
        if n >= 8:
            e = eigensolve(r, seed=int(rng.integers(1 << 30)))[int(rng.integers(0, n))]
            lo = int(rng.integers(1, n // 2 - 1))
            hi = int(rng.integers(max(n // 2 + 1, lo + 3), n - 1))
            sub = build_restriction(f, om, x, lo, hi, BoundaryPair(_unit(rng), _unit(rng)))
            for site in range(lo + 1, hi):
                worst["poisson"] = max(worst["poisson"], poisson_residual(sub, e.vector, e.value, site, r))
    dt = time.perf_counter() - t0
    tol = dict(det=1e-10, norm=1e-10, imag=1e-10, unitary=1e-10, relation=1e-8, recursion=1e-9, green=1e-7,
               poisson=1e-9)
    ok = all(worst[k] <= tol[k] for k in tol) and dt <= 30
    record(1, "algebraic identity suite", ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {dt:.1f}s")
    assert ok, (worst, dt)


def test_eigensolver_soundness(record):
    f, om = localized_field(), omega2()
    t0 = time.perf_counter()
    worst = dict(unimodular=0.0, residual=0.0, charpoly=0.0, perturbation=-math.inf)
    rng = np.random.default_rng(5)
    decaying = VerblunskyField.from_coeffs({(k,): 0.4 * 2.0 ** -k for k in range(21)}, h=0.01)
    trunc = VerblunskyField(truncate(decaying, 2).poly, decaying.h, 1)
    for n in (10, 50, 200):
        r = build_restriction(f, om, (0.1, 0.27), 0, n - 1, BoundaryPair(1j, -1))
        eigs = eigensolve(r)
        z = eigenvalues(eigs)
        worst["unimodular"] = max(worst["unimodular"], float(np.max(np.abs(np.abs(z) - 1))))
        worst["residual"] = max(worst["residual"], max(e.residual for e in eigs))
        for _ in range(5):
            p = complex(rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform()))
            lp, det = log_product(p - z), char_det_lu(r, p)
            rel = abs(np.exp(lp.log_modulus - det.log_modulus) * lp.phase / det.phase - 1)
            worst["charpoly"] = max(worst["charpoly"], rel)
        x = (float(rng.uniform()),)
        ra = build_restriction(decaying, golden(), x, 0, n - 1, BoundaryPair())
        rb = build_restriction(trunc, golden(), x, 0, n - 1, BoundaryPair())
        dist = matching_distance(eigenvalues(eigensolve(ra)), eigenvalues(eigensolve(rb)))
        bound = float(np.linalg.norm(ra.dense() - rb.dense(), 2))
        worst["perturbation"] = max(worst["perturbation"], dist - bound)
    dt = time.perf_counter() - t0
    ok = (worst["unimodular"] <= 1e-10 and worst["residual"] <= 1e-8 and worst["charpoly"] <= 1e-8
          and worst["perturbation"] <= 1e-10 and dt <= 60)
    record(2, "eigensolver soundness", ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {dt:.1f}s")
    assert ok, (worst, dt)


def test_lyapunov_sanity(record):
    t0 = time.perf_counter()
    om = golden()
    zero = VerblunskyField.zero(d=1)
    samples = phase_grid_array(1, 2000, seed=0)
    zero_err = max(abs(finite_lyapunov(zero, om, np.exp(1j * t), n, samples[:200]).value)
                   for t in (0.0, 1.0, 3.0) for n in (1, 10, 100))
    const = VerblunskyField.constant(0.6)
    L200 = finite_lyapunov(const, om, 1.0, 200, samples).value
    f, om2 = localized_field(), omega2()
    xs = phase_grid_array(2, 500, seed=3)
    worst = math.inf
    for z in (1.0, np.exp(2.2j), np.exp(5.9j)):
        for n, m in ((5, 7), (16, 16), (30, 3)):
            lhs = log_norms(f, om2, z, xs, n + m)
            rhs = log_norms(f, om2, z, xs, n) + log_norms(f, om2, z, xs, m, start=n)
            worst = min(worst, float(np.min(rhs - lhs)))
    dt = time.perf_counter() - t0
    ok = zero_err <= 1e-12 and abs(L200 - math.log(2)) <= 1e-2 and worst >= -1e-9 and dt <= 60
    record(3, "Lyapunov sanity", ok,
           f"zero={zero_err:.1e}, |L_200-log2|={abs(L200 - math.log(2)):.1e}, min slack={worst:.1e}, {dt:.1f}s")
    assert ok


def test_avalanche_principle(record):
    t0 = time.perf_counter()
    om = golden()
    const = VerblunskyField.constant(0.6)
    results = []
    for m in (2, 4, 8, 16, 32):
        for x in (0.0, 0.3):
            results.append(lyapunov_ap(const, om, 1.0, 10, m, x))
    rejected = False
    with pytest.raises(CmvError) as exc:
        lyapunov_ap(VerblunskyField.zero(d=1), om, 1.0, 10, 8, 0.0)
    rejected = exc.value.code == "ap-hypothesis-violated" and any(
        f["condition"] == "AP-1" for f in exc.value.details["failures"])
    dt = time.perf_counter() - t0
    ok = all(r.within_bound and r.difference <= r.bound for r in results) and rejected and dt <= 10
    worst = max(r.difference / r.bound for r in results)
    record(4, "avalanche principle", ok, f"max error/bound={worst:.1e}, zero field rejected at AP-1={rejected}, {dt:.1f}s")
    assert ok


def test_ldt_trend(record):
    t0 = time.perf_counter()
    const = VerblunskyField.constant(0.6)
    samples = phase_grid_array(1, 10_000, seed=0)
    ex = LdtExponents(tau=0.3)
    m16 = ldt_tail(const, golden(), 1.0, 16, samples, ex).empirical_measure
    m64 = ldt_tail(const, golden(), 1.0, 64, samples, ex).empirical_measure
    dt = time.perf_counter() - t0
    ok = m64 <= m16 and m16 < 0.5 and m64 < 0.5 and dt <= 120
    record(5, "LDT trend", ok, f"measure n=16: {m16:.3g}, n=64: {m64:.3g}, {dt:.1f}s")
    assert ok


def test_finite_scale_localization(record):
    t0 = time.perf_counter()
    cfg = cfgmod.load(CONFIGS / "reference_localize.json")
    report, (header, rows), failed = run_experiment(cfg)
    rows = [dict(zip(header, r)) for r in rows]
    good = [r for r in rows if r["rate"] >= r["floor_rate"] and r["violations"] == 0 and r["sep_ok"]]
    dt = time.perf_counter() - t0
    ok = bool(good) and not failed and dt <= 300
    detail = "no passing match"
    if good:
        r = good[0]
        detail = (f"index {r['index']}, rate={r['rate']:.3f} >= gamma/12={r['floor_rate']:.4f}, "
                  f"violations={r['violations']}, separation={r['separation']:.2e} >= {r['sep_threshold']:.1e}")
    record(6, "finite-scale localization", ok, f"{detail}, {dt:.1f}s")
    assert ok, failed


def test_scale_continuation(record):
    t0 = time.perf_counter()
    f, om = localized_field(), omega2()
    chain = scale_continuation(f, om, (0.77, 0.12), 16, 3)
    zero = scale_continuation(VerblunskyField.zero(d=2), om, (0.77, 0.12), 16, 3)
    dt = time.perf_counter() - t0
    tri = min(chain.triangle_slack)
    ok = (chain.scales == [16, 32, 64, 128] and chain.strictly_decreasing and tri >= 0
          and chain.status == "localized" and zero.status in ("flat", "broken") and dt <= 300)
    record(7, "scale continuation", ok,
           f"drifts={[f'{d:.1e}' for d in chain.eigenvalue_drift]}, triangle slack={tri:.1e}, "
           f"zero field status={zero.status}, {dt:.1f}s")
    assert ok


def test_covering_soundness(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    om = omega2()
    issued = sound = tried = 0
    while issued < 50 and tried < 1000:
        tried += 1
        c0 = rng.uniform(0.3, 0.9) * np.exp(2j * np.pi * rng.random())
        cs = {(0, 0): c0}
        for _ in range(2):
            k = tuple(int(v) for v in rng.integers(-2, 3, 2))
            cs[k] = cs.get(k, 0) + rng.uniform(0, 0.9 - abs(c0)) / 2 * np.exp(2j * np.pi * rng.random())
        f = VerblunskyField.from_coeffs(cs, h=1e-4)
        x0 = tuple(rng.random(2))
        n, length = int(rng.integers(40, 80)), int(rng.integers(12, 24))
        z = np.exp(2j * np.pi * rng.random())
        rep = covering_certificate(f, om, x0, z, (0, n - 1), centered_cover((0, n - 1), length),
                                   lyap=LyapunovCache(f, om, 128))
        if rep.certified:
            issued += 1
            sound += rep.true_distance >= rep.gap
    dt = time.perf_counter() - t0
    ok = issued == 50 and sound == 50 and dt <= 120
    record(8, "covering-certificate soundness", ok, f"{sound}/{issued} sound, {tried} instances tried, {dt:.1f}s")
    assert ok


def test_determinism(record, tmp_path):
    t0 = time.perf_counter()
    outs = [tmp_path / "a", tmp_path / "b"]
    configs = sorted(CONFIGS.glob("*.json"))
    codes = []
    for out in outs:
        for c in configs:
            p = subprocess.run([sys.executable, "-m", "cmvloc.cli", "run", str(c), "--output-dir", str(out)],
                               capture_output=True, text=True)
            codes.append(p.returncode)
    files = sorted(p.name for p in outs[0].iterdir())
    same = all((outs[0] / name).read_bytes() == (outs[1] / name).read_bytes() for name in files)
    experiments = {json.loads(c.read_text())["experiment"] for c in configs}
    dt = time.perf_counter() - t0
    ok = same and len(files) == 2 * len(configs) and all(c == 0 for c in codes) and experiments == set(cfgmod.EXPERIMENTS)
    record(9, "determinism", ok, f"{len(files)} files byte-identical across two runs={same}, exit codes={set(codes)}, {dt:.1f}s")
    assert ok
