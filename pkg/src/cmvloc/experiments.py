"""Experiment runners behind the CLI.  Each returns (report, (csv_header, csv_rows), failed_assertions)."""
from concurrent.futures import ThreadPoolExecutor
import math

import numpy as np

from . import lab
from .cmv import build_restriction, greens_entry, greens_ratio
from .cocycle import finite_lyapunov
from .errors import CmvError
from .spectra import eigensolve
from .torus import diophantine_margin, phase_grid_array

TWO_PI = 2 * math.pi


def _theta(z):
    return float(np.mod(np.angle(z), TWO_PI))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _meta(cfg):
    return {"experiment": cfg.experiment, "seed": cfg.seed, "field": cfg.field.to_dict(),
            "omega": {"omega": list(cfg.omega.omega), "p": cfg.omega.p, "q": cfg.omega.q,
                      "k_max": cfg.k_max, "margin": diophantine_margin(cfg.omega, cfg.k_max)},
            "boundary": cfg.boundary.to_dict(), "exponents": cfg.exponents.to_dict(),
            "c_alpha": cfg.field.c_alpha, "schema_version": lab.SCHEMA_VERSION}


def run_lyapunov(cfg, threads=0):
    count = int(cfg.params.get("samples", 256))
    samples = phase_grid_array(cfg.field.d, count, cfg.seed)
    jobs = [(z, n) for z in cfg.z_grid for n in (cfg.scales or [64])]
    ests = _map(lambda job: finite_lyapunov(cfg.field, cfg.omega, job[0], job[1], samples), jobs, threads)
    rows = [[_theta(z), z.real, z.imag, n, e.value, e.std_error, e.sample_count, e.gamma_floor]
            for (z, n), e in zip(jobs, ests)]
    failed = [f"L_n above c_alpha at n={e.n}" for e in ests if e.value > cfg.field.c_alpha + 1e-12]
    report = {"meta": _meta(cfg), "estimates": [dict(z=z, **e.to_dict()) for (z, _), e in zip(jobs, ests)]}
    table = (["theta", "re_z", "im_z", "n", "L_n", "std_error", "samples", "gamma_floor"], rows)
    return report, table, failed


def run_ldt(cfg, threads=0):
    count = int(cfg.params.get("samples", 1024))
    kind = cfg.params.get("kind", "monodromy")
    samples = phase_grid_array(cfg.field.d, count, cfg.seed)
    jobs = [(z, n) for z in cfg.z_grid for n in (cfg.scales or [16, 64])]
    reps = _map(lambda job: lab.ldt_tail(cfg.field, cfg.omega, job[0], job[1], samples, cfg.exponents, kind,
                                         cfg.boundary, lyap_seed=cfg.seed + 1_000_003), jobs, threads)
    failed = [f"measure outside [0,1] at n={r.n}" for r in reps if not 0 <= r.empirical_measure <= 1]
    rows = [[_theta(r.z), r.z.real, r.z.imag, r.n, r.kind, r.threshold, r.empirical_measure, r.exceed_count,
             r.sample_count, r.L_n] for r in reps]
    report = {"meta": _meta(cfg), "reports": [r.to_dict() for r in reps]}
    table = (["theta", "re_z", "im_z", "n", "kind", "threshold", "measure", "exceed", "samples", "L_n"], rows)
    return report, table, failed


def select_z0(eigs, n, l, spec):
    """z0 from the config: {"theta": t} picks the eigenvalue nearest e^{it};
    {"select": "most_localized_bulk"} the smallest participation number among
    eigenvectors peaking at least l sites from both edges."""
    if "theta" in spec:
        z = np.exp(1j * float(spec["theta"]))
        return int(np.argmin([abs(e.value - z) for e in eigs]))
    if spec.get("select") == "most_localized_bulk":
        best, j0 = math.inf, None
        for j, e in enumerate(eigs):
            peak = int(np.argmax(np.abs(e.vector)))
            if l <= peak <= n - 1 - l:
                pn = 1.0 / float(np.sum(np.abs(e.vector) ** 4))
                if pn < best:
                    best, j0 = pn, j
        if j0 is None:
            raise CmvError("invalid-config", "no bulk eigenvector to select")
        return j0
    raise CmvError("invalid-config", f"params.z0: unsupported spec {spec!r}")


def run_localize(cfg, threads=0):
    p = cfg.params
    n, l = int(p.get("n", 400)), int(p.get("l", 20))
    x0 = tuple(p.get("x0", [0.0] * cfg.field.d))
    lyap = lab.LyapunovCache(cfg.field, cfg.omega, int(p.get("lyapunov_samples", 512)), cfg.seed)
    r = build_restriction(cfg.field, cfg.omega, x0, 0, n - 1, cfg.boundary)
    eigs = eigensolve(r, cfg.seed)
    zspec = p.get("z0", {"select": "most_localized_bulk"})
    if isinstance(zspec, dict):
        j = select_z0(eigs, n, l, zspec)
        z0 = eigs[j].value
    else:
        z0 = complex(*zspec)
    rep = lab.finite_scale_localize(cfg.field, cfg.omega, x0, z0, n, l, p.get("interval"), cfg.exponents,
                                    p.get("gamma"), cfg.boundary, lyap, p.get("fit_min_dist"), cfg.seed, eigs)
    c_sep = float(p.get("C_sep", cfg.field.c_alpha))
    seps = [lab.eigen_separation_check(m, eigs, m.index, c_sep) for m in rep.matches]
    rows = [[m.index, _theta(m.eigenvalue), m.eigenvalue.real, m.eigenvalue.imag, m.center_interval[0],
             m.center_interval[1], m.rate, m.floor_rate, m.max_violation, len(m.violation_sites), m.fit_points,
             m.residual, s.separation, s.threshold, s.passes] for m, s in zip(rep.matches, seps)]
    failed = []
    # every listed violation must be a genuine one
    for m in rep.matches:
        u = np.abs(eigs[m.index].vector)
        for s in m.violation_sites:
            d = lab.interval_distance([s], m.center_interval)[0]
            if not u[s] >= math.exp(-m.floor_rate * d):
                failed.append(f"spurious violation at site {s}")
    good = [m for m, s in zip(rep.matches, seps) if m.ok and s.passes]
    if cfg.expect.get("localized_match") and not good:
        failed.append("no matched eigenpair with rate >= gamma/12, zero violations and separation")
    report = {"meta": _meta(cfg), "localization": rep.to_dict(), "separation": [s.to_dict() for s in seps],
              "C_sep": c_sep, "passing_matches": len(good)}
    table = (["index", "theta", "re_z", "im_z", "I_lo", "I_hi", "rate", "floor_rate", "max_violation",
                      "violations", "fit_points", "residual", "separation", "sep_threshold", "sep_ok"], rows)
    return report, table, failed


def run_greens(cfg, threads=0):
    p = cfg.params
    n = int(p.get("n", 20))
    x0 = tuple(p.get("x0", [0.0] * cfg.field.d))
    r = build_restriction(cfg.field, cfg.omega, x0, 0, n - 1, cfg.boundary)
    pairs = p.get("pairs") or [[j, k] for j in range(n) for k in range(j, n)]
    rows, failed, worst = [], [], 0.0
    for z in cfg.z_grid:
        for j, k in pairs:
            g = greens_entry(r, j, k, z)
            ratio = greens_ratio(r, j, k, z) if j <= k else float("nan")
            rel = abs(abs(g) - ratio) / abs(g) if j <= k and g != 0 else 0.0
            worst = max(worst, rel)
            rows.append([_theta(z), j, k, g.real, g.imag, abs(g), ratio, rel])
    tol = float(p.get("tolerance", 1e-7))
    if worst > tol:
        failed.append(f"Green ratio mismatch {worst:.3e} > {tol}")
    report = {"meta": _meta(cfg), "n": n, "max_relative_error": worst, "entries": len(rows)}
    table = (["theta", "j", "k", "re_G", "im_G", "abs_G", "ratio_abs", "rel_err"], rows)
    return report, table, failed


def run_ndr(cfg, threads=0):
    p = cfg.params
    x0 = tuple(p.get("x0", [0.0] * cfg.field.d))
    interval = tuple(p.get("interval", [0, 99]))
    lyap = lab.LyapunovCache(cfg.field, cfg.omega, int(p.get("lyapunov_samples", 512)), cfg.seed)
    reps = [lab.ndr_scan(cfg.field, cfg.omega, z, x0, interval, int(p.get("K", 4)), int(p.get("l", 10)),
                         float(p.get("C", 1.0)), cfg.exponents, cfg.boundary, lyap, p.get("component_length"))
            for z in cfg.z_grid]
    rows = []
    for z, rep in zip(cfg.z_grid, reps):
        bad = set(rep.bad_set)
        for s, v in zip(range(interval[0], interval[1] + 1), rep.log_dets):
            rows.append([_theta(z), s, v, rep.threshold, s in bad])
    report = {"meta": _meta(cfg), "reports": [r.to_dict() for r in reps]}
    table = (["theta", "site", "log_det", "threshold", "bad"], rows)
    return report, table, []


def run_continue(cfg, threads=0):
    p = cfg.params
    x = tuple(p.get("x", [0.0] * cfg.field.d))
    lyap = lab.LyapunovCache(cfg.field, cfg.omega, int(p.get("lyapunov_samples", 512)), cfg.seed)
    chain = lab.scale_continuation(cfg.field, cfg.omega, x, int(p.get("base_n", 16)), int(p.get("k_max", 3)),
                                   p.get("gamma"), p.get("j0"), p.get("schedule", "geometric"), cfg.boundary,
                                   lyap, cfg.seed)
    failed = []
    if any(s < 0 for s in chain.triangle_slack):
        failed.append("triangle inequality violated")
    want = cfg.expect.get("status")
    if want is not None:
        allowed = want if isinstance(want, list) else [want]
        if chain.status not in allowed:
            failed.append(f"status {chain.status!r} not in {allowed}")
    if cfg.expect.get("strictly_decreasing") and not chain.strictly_decreasing:
        failed.append("eigenvalue drift not strictly decreasing")
    rows = []
    for k, n in enumerate(chain.scales):
        step = k - 1
        rows.append([k, n, chain.indices[k], chain.eigenvalues[k].real, chain.eigenvalues[k].imag,
                     chain.eigenvalue_drift[step] if step >= 0 else 0.0,
                     chain.vector_drift[step] if step >= 0 else 0.0,
                     chain.vector_residual[step] if step >= 0 else 0.0, chain.decay_rates[k]])
    report = {"meta": _meta(cfg), "chain": chain.to_dict()}
    table = (["k", "n_k", "index", "re_z", "im_z", "eigenvalue_drift", "vector_drift",
                      "vector_residual", "decay_rate"], rows)
    return report, table, failed


def run_covering(cfg, threads=0):
    p = cfg.params
    x0 = tuple(p.get("x0", [0.0] * cfg.field.d))
    interval = tuple(p.get("interval", [0, 59]))
    cover = lab.centered_cover(interval, int(p.get("cover_length", 20)))
    lyap = lab.LyapunovCache(cfg.field, cfg.omega, int(p.get("lyapunov_samples", 512)), cfg.seed)
    outer = build_restriction(cfg.field, cfg.omega, x0, interval[0], interval[1], cfg.boundary)
    eigs = eigensolve(outer, cfg.seed)
    reps = [lab.covering_certificate(cfg.field, cfg.omega, x0, z, interval, cover, cfg.exponents, cfg.boundary,
                                     lyap, cfg.seed, eigs) for z in cfg.z_grid]
    failed = [f"unsound certificate at z={r.z0}" for r in reps if not r.sound]
    rows = [[_theta(r.z0), r.certified, r.gap, r.rigorous_radius, r.true_distance, r.sound, len(r.failures)]
            for r in reps]
    report = {"meta": _meta(cfg), "reports": [r.to_dict() for r in reps]}
    table = (["theta", "certified", "gap", "rigorous_radius", "true_distance", "sound", "failures"], rows)
    return report, table, failed


RUNNERS = {"lyapunov": run_lyapunov, "ldt": run_ldt, "localize": run_localize, "greens": run_greens,
           "ndr": run_ndr, "continue-scales": run_continue, "covering": run_covering}


def run(cfg, threads=0):
    return RUNNERS[cfg.experiment](cfg, threads)
