"""Desk-scale localization experiments: LDT tails, NDR scans, finite-scale
localization, eigenvalue separation, multi-scale continuation and the covering
certificate.

Determinant thresholds compare n L_n with the normalized determinant
log|phi| - sum log rho_j over the interior coefficients (see cmv.normalized_log_det);
the raw determinant carries an extra prod rho_j that no Lyapunov average accounts for.
"""
from dataclasses import dataclass, field, asdict
import csv
import io
import json
import math

import numpy as np

from .cmv import (BoundaryPair, boundary_weights, build_restriction, char_det_lu,
                  greens_columns, normalized_log_det)
from .cocycle import LdtExponents, field_alphas, finite_lyapunov, log_norms, monodromy_batch
from .errors import CmvError
from .spectra import eigensolve, eigenvalues, separation
from .torus import Frequency, as_phase, phase_grid_array

SCHEMA_VERSION = 1

# envelope constants of the finite- and full-scale statements
GAMMA_DIVISORS = {"finite_scale": 12, "chain_step": (12, 48, 17), "full_scale": (16, 50), "separation": 60}
COVER_MARGIN = 1e-9   # Green sums must stay below 1 - COVER_MARGIN


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=1)


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class LyapunovCache:
    """L_n(z) estimates on a fixed Kronecker sample set, computed once per (z, n)."""

    def __init__(self, field, omega, count=512, seed=0):
        self.field = field
        self.omega = omega
        self.samples = phase_grid_array(field.d, count, seed)
        self._store = {}

    def __call__(self, z, n):
        key = (complex(z), int(n))
        if key not in self._store:
            self._store[key] = finite_lyapunov(self.field, self.omega, z, n, self.samples)
        return self._store[key]


def window_log_dets(field, omega, z, xs, l, boundary, start=0):
    """Normalized log|phi^{beta,eta}_{[0,l-1]}| at each phase row of xs, shifted by `start` steps.

    Equals log|[z, -conj eta] M_{l-1} (1, -beta)^T| with M_{l-1} the normalized monodromy.
    """
    if l == 1:
        v = np.full(len(np.atleast_2d(xs)), abs(z + np.conj(boundary.eta) * boundary.beta))
        return np.log(v)
    ent, ls = monodromy_batch(field_alphas(field, omega, xs, l - 1, start), z)
    v = ent @ np.array([1.0, -boundary.beta])
    val = z * v[:, 0] - np.conj(boundary.eta) * v[:, 1]
    with np.errstate(divide="ignore"):
        return np.log(np.abs(val)) + ls


def shifted_phases(x0, omega, sites):
    om = omega.vector if isinstance(omega, Frequency) else np.asarray(omega, float)
    return np.mod(np.asarray(x0, float)[None, :] + np.asarray(sites, float)[:, None] * om[None, :], 1.0)


# LDT -----------------------------------------------------------------------------

@dataclass
class LdtReport:
    n: int
    z: complex
    threshold: float
    empirical_measure: float
    sample_count: int
    kind: str
    L_n: float
    L_n_std_error: float
    exponents: dict
    exceed_count: int
    flags: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k != "flags"}
        d["schema_version"] = SCHEMA_VERSION
        return d


def ldt_tail(field, omega, z, n, samples, exponents=None, kind="monodromy", boundary=None,
             threshold=None, lyap_seed=None):
    """Fraction of sampled phases with |log||M_n|| - n L_n| > n^{1-tau}
    (or the determinant analogue).  L_n uses an independent Kronecker sample set."""
    exponents = exponents or LdtExponents()
    if n < 2:
        raise CmvError("invalid-argument", "n must be >= 2")
    xs = np.asarray(samples, float).reshape(-1, field.d)
    if len(xs) == 0:
        raise CmvError("invalid-argument", "samples must be nonempty")
    seed = 1_000_003 if lyap_seed is None else lyap_seed
    est = finite_lyapunov(field, omega, z, n, phase_grid_array(field.d, len(xs), seed))
    thr = n ** (1 - exponents.tau) if threshold is None else float(threshold)
    if kind == "monodromy":
        vals = log_norms(field, omega, z, xs, n)
    elif kind == "determinant":
        boundary = boundary or BoundaryPair()
        vals = window_log_dets(field, omega, z, xs, n, boundary)
    else:
        raise CmvError("invalid-argument", f"unknown kind {kind!r}")
    dev = np.abs(vals - n * est.value)
    flags = dev > thr
    cnt = int(np.count_nonzero(flags))
    return LdtReport(n, complex(z), thr, cnt / len(xs), len(xs), kind, est.value, est.std_error,
                     exponents.to_dict(), cnt, flags)


# NDR -------------------------------------------------------------------------------

def components(interval, bad):
    """Maximal runs of consecutive sites of [lo, hi] not in `bad`, as (start, length)."""
    lo, hi = interval
    bad = set(int(b) for b in bad)
    runs = []
    start = None
    for s in range(lo, hi + 2):
        good = s <= hi and s not in bad
        if good and start is None:
            start = s
        elif not good and start is not None:
            runs.append((start, s - start))
            start = None
    return runs


def classify_ndr(interval, bad, K, min_length):
    runs = components(interval, bad)
    gap = min((length for _, length in runs), default=0)
    ok = len(set(bad)) <= K and all(length > min_length for _, length in runs)
    return ok, gap


@dataclass
class NdrReport:
    interval: tuple
    K: int
    l: int
    C: float
    bad_set: list
    is_ndr: bool
    min_component_gap: int
    component_length: float
    L_l: float
    threshold: float
    log_dets: list
    exponents: dict

    def to_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


def ndr_scan(field, omega, z, x, interval, K, l, C, exponents=None, boundary=None,
             lyap=None, component_length=None):
    """(K, l, C)-NDR test: site n is bad when
    log|phi_{[0,l-1]}(x + (n-1) w)| <= l L_l - C l^{1-tau/3}."""
    exponents = exponents or LdtExponents()
    boundary = boundary or BoundaryPair()
    if l < 2:
        raise CmvError("invalid-argument", "l must be >= 2")
    lo, hi = interval
    sites = np.arange(lo, hi + 1)
    lyap = lyap or LyapunovCache(field, omega)
    L_l = lyap(z, l).value
    thr = l * L_l - C * l ** (1 - exponents.tau / 3)
    xs = shifted_phases(as_phase(x).x, omega, sites - 1)
    vals = window_log_dets(field, omega, z, xs, l, boundary)
    bad = [int(s) for s, v in zip(sites, vals) if not v > thr]
    min_len = l ** (2 / exponents.nu) if component_length is None else component_length
    ok, gap = classify_ndr((lo, hi), bad, K, min_len)
    return NdrReport((int(lo), int(hi)), int(K), int(l), float(C), bad, ok, int(gap), float(min_len),
                     float(L_l), float(thr), [float(v) for v in vals], exponents.to_dict())


# finite-scale localization ------------------------------------------------------------

@dataclass
class DecayFit:
    center_interval: tuple
    rate: float
    floor_rate: float
    max_violation: float
    index: int
    eigenvalue: complex
    min_distance: float
    fit_points: int
    violation_sites: list
    residual: float

    def to_dict(self):
        return asdict(self)

    @property
    def ok(self):
        return self.rate >= self.floor_rate and not self.violation_sites


def interval_distance(sites, interval):
    lo, hi = interval
    sites = np.asarray(sites)
    return np.maximum(0, np.maximum(lo - sites, sites - hi))


NOISE_FLOOR = 1e-13
GAMMA_EPS = 1e-12   # exponent estimates below this are rounding noise


def decay_fit(u, sites, interval, gamma, min_dist, index=-1, eigenvalue=0j, residual=0.0):
    """Least-squares decay rate of |u(s)| against dist(s, I) for dist >= min_dist,
    and the sites violating |u(s)| < exp(-gamma/12 dist(s, I)).

    Entries below NOISE_FLOOR * max|u| are left out of the fit (they are rounding
    noise) but still checked against the envelope.
    """
    a = np.abs(np.asarray(u))
    dist = interval_distance(sites, interval)
    region = dist >= min_dist
    floor_rate = gamma / GAMMA_DIVISORS["finite_scale"]
    env = -floor_rate * dist
    with np.errstate(divide="ignore"):
        logs = np.log(a)
    viol = region & (logs >= env)
    vsites = [int(s) for s in np.asarray(sites)[viol]]
    excess = float(np.max(logs[region] - env[region])) if np.any(region) else -np.inf
    usable = region & (a > NOISE_FLOOR * a.max())
    if np.count_nonzero(usable) >= 2 and np.ptp(dist[usable]) > 0:
        slope = np.polyfit(dist[usable].astype(float), logs[usable], 1)[0]
        rate = float(-slope)
    elif np.any(region):
        rate = math.inf  # everything beyond the cutoff is below the noise floor
    else:
        rate = math.inf  # vacuous: nothing to fit
    return DecayFit((int(interval[0]), int(interval[1])), rate, float(floor_rate), excess, int(index),
                    complex(eigenvalue), float(min_dist), int(np.count_nonzero(usable)), vsites,
                    float(residual))


@dataclass
class LocalizationReport:
    n: int
    l: int
    z0: complex
    interval: tuple
    gamma: float
    L_l: float
    L_n: float
    L_n_std_error: float
    hypothesis_threshold: float
    hypothesis_failures: list
    fit_min_distance: float
    desk_scale_cutoff: bool
    shape_warnings: list
    matches: list
    exponents: dict
    eigs: list = field(default=None, repr=False)
    restriction: object = field(default=None, repr=False)

    @property
    def hypothesis_holds(self):
        return not self.hypothesis_failures

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("eigs", "restriction")}
        d["matches"] = [m.to_dict() for m in self.matches]
        d["schema_version"] = SCHEMA_VERSION
        return d


def hypothesis_scan(field, omega, x0, z0, n, l, exponents, boundary, L_l):
    """Windows [m, m+l-1], m in [0, n-l], failing log|phi| > l L_l - l^{1-tau/4}."""
    thr = l * L_l - l ** (1 - exponents.tau / 4)
    ms = np.arange(0, n - l + 1)
    vals = window_log_dets(field, omega, z0, shifted_phases(as_phase(x0).x, omega, ms), l, boundary)
    return thr, ms, vals


def auto_interval(ms, vals, thr, l, n):
    """Hull of the windows failing the hypothesis.

    If none fails (the slack l^{1-tau/4} dominates at desk scale), fall back to the
    most resonant window, the one with the smallest determinant.
    """
    bad = ms[~(vals > thr)]
    if len(bad) == 0:
        m = int(ms[np.argmin(vals)])
        return (m, min(n - 1, m + l - 1))
    return (int(bad.min()), int(min(n - 1, bad.max() + l - 1)))


def finite_scale_localize(field, omega, x0, z0, n, l, interval=None, exponents=None, gamma=None,
                          boundary=None, lyap=None, fit_min_dist=None, seed=0, eigs=None):
    """Finite-scale localization check on E^{beta,eta}_{[0,n-1]}.

    (i) hypothesis at every window m outside I; (ii) eigenpairs with |z_j - z0| < e^{-l};
    (iii) decay fit against dist(s, I) beyond the cutoff l^{2/nu}.  When that cutoff
    exceeds n (always, at desk scale, for small nu) the cutoff falls back to
    fit_min_dist (default l) and desk_scale_cutoff is set.
    """
    exponents = exponents or LdtExponents()
    boundary = boundary or BoundaryPair()
    lyap = lyap or LyapunovCache(field, omega)
    x0 = as_phase(x0)
    warnings = []
    if l > n ** (exponents.nu / 2):
        warnings.append(f"l = {l} exceeds n^(nu/2) = {n ** (exponents.nu / 2):.4g}")
    L_l = lyap(z0, l).value
    est = lyap(z0, n)
    g = est.gamma_floor if gamma is None else float(gamma)
    thr, ms, vals = hypothesis_scan(field, omega, x0, z0, n, l, exponents, boundary, L_l)
    I = auto_interval(ms, vals, thr, l, n) if interval is None else (int(interval[0]), int(interval[1]))
    if not (0 <= I[0] <= I[1] <= n - 1):
        raise CmvError("invalid-argument", f"I = {I} must lie in [0, {n - 1}]")
    outside = (ms < I[0]) | (ms > I[1])
    failures = [{"m": int(m), "log_det": float(v), "threshold": float(thr)}
                for m, v, o in zip(ms, vals, outside) if o and not v > thr]
    cutoff = l ** (2 / exponents.nu)
    desk = cutoff >= n
    if desk:
        cutoff = float(l if fit_min_dist is None else fit_min_dist)
    r = build_restriction(field, omega, x0, 0, n - 1, boundary)
    eigs = eigensolve(r, seed) if eigs is None else eigs
    vals_z = eigenvalues(eigs)
    matched = np.nonzero(np.abs(vals_z - z0) < math.exp(-l))[0]
    if not g > GAMMA_EPS:
        # no positive exponent: the envelope exp(-gamma/12 dist) is vacuous
        warnings.append("gamma <= 0, no eigenpair can be certified")
        matched = matched[:0]
    sites = np.arange(n)
    fits = [decay_fit(eigs[j].vector, sites, I, g, cutoff, j, eigs[j].value, eigs[j].residual)
            for j in matched]
    return LocalizationReport(n, l, complex(z0), I, g, L_l, est.value, est.std_error, thr, failures,
                              cutoff, desk, warnings, fits, exponents.to_dict(), eigs, r)


@dataclass
class SeparationCheck:
    passes: bool
    margin: float
    separation: float
    threshold: float

    def to_dict(self):
        return asdict(self)


def eigen_separation_check(fit, eigs, j, C_sep):
    """separation(eigs, j) >= exp(-C_sep |I|)."""
    size = fit.center_interval[1] - fit.center_interval[0] + 1
    thr = math.exp(-C_sep * size)
    sep = separation(eigs, j)
    return SeparationCheck(bool(sep >= thr), float(sep - thr), float(sep), float(thr))


# scale continuation --------------------------------------------------------------------

@dataclass
class ScaleChain:
    base_n: int
    scales: list
    schedule: str
    indices: list
    eigenvalues: list
    eigenvalue_drift: list
    vector_drift: list
    vector_residual: list
    overlaps: list
    decay_rates: list
    interval: tuple
    gamma: float
    status: str
    broken_at: int
    triangle_slack: list

    def to_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @property
    def strictly_decreasing(self):
        d = self.eigenvalue_drift
        return all(b < a for a, b in zip(d, d[1:]))


def schedule_scales(base_n, k_max, schedule="geometric"):
    if schedule == "geometric":
        return [base_n * 2 ** k for k in range(k_max + 1)]
    if schedule == "squaring":
        return [base_n ** (2 ** k) for k in range(k_max + 1)]
    raise CmvError("invalid-argument", f"unknown schedule {schedule!r}")


def _pad(u, a_small, a_big, n_big):
    out = np.zeros(n_big, complex)
    out[a_small - a_big: a_small - a_big + len(u)] = u
    return out


def centered_index(eigs, sites):
    """Eigenvector with the smallest spread sum |s| |u(s)|^2 around site 0."""
    w = np.abs(np.asarray(sites, float))
    spread = [float(np.sum(w * np.abs(e.vector) ** 2)) for e in eigs]
    return int(np.argmin(spread))


def continue_chain(restrictions, j0, gamma, interval, seed=0, schedule="geometric", base_n=None):
    """Match eigenpairs across nested restrictions (constructive core of the
    approximate-eigenvector lemma applied to zero-padded vectors)."""
    all_eigs = [eigensolve(r, seed) for r in restrictions]
    idx = [int(j0)]
    zs = [all_eigs[0][j0].value]
    drift, vdrift, resid, overl = [], [], [], []
    rates = []
    broken_at = -1
    for k in range(len(restrictions)):
        r, e = restrictions[k], all_eigs[k]
        fit = decay_fit(e[idx[-1]].vector, r.sites, interval, gamma, 0)
        rates.append(fit.rate)
        if k + 1 == len(restrictions):
            break
        rn, en = restrictions[k + 1], all_eigs[k + 1]
        u = _pad(e[idx[-1]].vector, r.a, rn.a, rn.n)
        z = zs[-1]
        eps = float(np.linalg.norm(rn.dense() @ u - z * u))
        vals = eigenvalues(en)
        d = np.abs(vals - z)
        V = np.column_stack([p.vector for p in en])
        ov = np.abs(V.conj().T @ u)
        best = np.nonzero(d <= d.min() * (1 + 1e-12) + 1e-300)[0]
        j = int(best[np.argmax(ov[best])])
        idx.append(j)
        zs.append(en[j].value)
        drift.append(float(d[j]))
        vdrift.append(float(np.sqrt(max(0.0, 2.0 - 2.0 * ov[j]))))
        resid.append(eps)
        overl.append(float(ov[j]))
        if broken_at < 0 and (d[j] > 10 * math.sqrt(2) * eps or ov[j] < (2 * rn.n) ** -0.5):
            broken_at = k
    slack = [float(drift[k] + drift[k + 1] + 1e-12 - abs(zs[k + 2] - zs[k])) for k in range(len(drift) - 1)]
    scales = [(r.n + 1) // 2 for r in restrictions]
    if not gamma > GAMMA_EPS:
        status = "flat"
    elif broken_at >= 0:
        status = "broken"
    else:
        dec = all(b < a for a, b in zip(drift, drift[1:]))
        small = all(eps <= math.exp(-gamma / 50 * n) for eps, n in zip(resid, scales))
        status = "localized" if dec and small else "flat"
    return ScaleChain(base_n or scales[0], scales, schedule, idx, [complex(z) for z in zs], drift, vdrift,
                      resid, overl, rates, tuple(int(v) for v in interval), float(gamma), status,
                      broken_at, slack), all_eigs


def scale_continuation(field, omega, x, base_n, k_max, gamma=None, j0=None, schedule="geometric",
                       boundary=None, lyap=None, seed=0, z_ref=1.0 + 0j):
    """Eigenpair continuation across windows [-(n_k - 1), n_k - 1].

    gamma defaults to the measured gamma_emp at the base eigenvalue and the largest scale.
    j0 defaults to the base eigenvector most concentrated around site 0.
    """
    if base_n < 8:
        raise CmvError("invalid-argument", "base_n must be >= 8")
    boundary = boundary or BoundaryPair()
    scales = schedule_scales(base_n, k_max, schedule)
    rs = [build_restriction(field, omega, x, -(n - 1), n - 1, boundary) for n in scales]
    base_eigs = eigensolve(rs[0], seed)
    if j0 is None:
        j0 = centered_index(base_eigs, rs[0].sites)
    if gamma is None:
        lyap = lyap or LyapunovCache(field, omega)
        gamma = lyap(base_eigs[j0].value, scales[-1]).gamma_floor
    interval = (-(base_n - 1), base_n - 1)
    chain, _ = continue_chain(rs, j0, gamma, interval, seed, schedule, base_n)
    return chain


# covering certificate ------------------------------------------------------------------

@dataclass
class CoverCheck:
    m: int
    sub_interval: tuple
    dist_ok: bool
    log_det: float
    threshold: float
    det_ok: bool
    green_sum: float
    green_norm: float
    weights: float

    def to_dict(self):
        return asdict(self)


@dataclass
class CoveringReport:
    interval: tuple
    z0: complex
    certified: bool
    gap: float
    rigorous_radius: float
    true_distance: float
    sound: bool
    failures: list
    checks: list
    exponents: dict

    def to_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


def centered_cover(interval, length):
    """I_m: a window of the given length around m, clipped to the interval."""
    a, b = interval
    length = min(length, b - a + 1)
    out = {}
    for m in range(a, b + 1):
        lo = min(max(a, m - length // 2), b - length + 1)
        out[m] = (lo, lo + length - 1)
    return out


def covering_certificate(field, omega, x0, z0, interval, sub_intervals, exponents=None,
                         boundary=None, lyap=None, seed=0, eigs=None):
    """Gap certificate dist(z0, spec E^{beta,eta}_{[a,b]}) >= exp(-2 max|I_m|^{1-tau/4}).

    Checked per m: (i) dist(m, [a,b] minus I_m) >= |I_m|/100; (iii) the normalized
    determinant of E^{beta,eta}_{I_m} exceeds |I_m| L_{|I_m|} - |I_m|^{1-tau/4}; and
    (cover) the Poisson-formula Green sums
        S_m = sum over ends e of W_e (|G_{I_m}(m, e)| + g ||G||^2 / (1 - g ||G||)) <= 1 - margin
    at z0, which by the resolvent identity bounds the sums on the whole arc |z - z0| < g
    and rules out eigenvalues there.  The certificate is issued only if all three hold.
    """
    exponents = exponents or LdtExponents()
    boundary = boundary or BoundaryPair()
    lyap = lyap or LyapunovCache(field, omega)
    a, b = interval
    x0 = as_phase(x0)
    z0 = complex(z0)
    outer = build_restriction(field, omega, x0, a, b, boundary)
    power = 1 - exponents.tau / 4
    gap = math.exp(-2 * max((hi - lo + 1) ** power for lo, hi in sub_intervals.values()))
    checks, failures = [], []
    radius = math.inf
    for m in range(a, b + 1):
        if m not in sub_intervals:
            failures.append({"m": m, "reason": "no sub-interval"})
            continue
        lo, hi = sub_intervals[m]
        if not (a <= lo <= m <= hi <= b):
            failures.append({"m": m, "reason": "sub-interval must contain m and lie in the interval"})
            continue
        size = hi - lo + 1
        left = m - lo + 1 if lo > a else math.inf
        right = hi - m + 1 if hi < b else math.inf
        dist_ok = min(left, right) >= size / 100
        sub = build_restriction(field, omega, x0, lo, hi, boundary)
        det = char_det_lu(sub, z0)
        if det.log_modulus == -math.inf:
            failures.append({"m": m, "reason": "z0 is an eigenvalue of the sub-block"})
            continue
        logd = normalized_log_det(sub, z0, det)
        thr = size * lyap(z0, size).value - size ** power
        det_ok = logd > thr
        G = greens_columns(sub, z0, list(range(lo, hi + 1)))
        gnorm = float(np.linalg.norm(G, 2))
        c = np.abs(boundary_weights(sub, outer, z0))
        wa, wb = c[0] + c[1], c[2] + c[3]
        s0 = wa * abs(G[m - lo, 0]) + wb * abs(G[m - lo, -1])
        if gap * gnorm < 1:
            pert = gap * gnorm ** 2 / (1 - gap * gnorm)
            s = s0 + (wa + wb) * pert
        else:
            s = math.inf
        # largest radius for which the sum stays below 1 - margin
        room = 1 - COVER_MARGIN - s0
        if room <= 0:
            radius = 0.0
        elif wa + wb > 0:
            dstar = room / (wa + wb)
            radius = min(radius, dstar / (gnorm * (gnorm + dstar)))
        checks.append(CoverCheck(m, (lo, hi), bool(dist_ok), float(logd), float(thr), bool(det_ok),
                                 float(s), gnorm, float(wa + wb)))
        if not dist_ok:
            failures.append({"m": m, "reason": "(i) distance"})
        if not det_ok:
            failures.append({"m": m, "reason": "(iii) determinant bound", "log_det": float(logd),
                             "threshold": float(thr)})
        if not s <= 1 - COVER_MARGIN:
            failures.append({"m": m, "reason": "covering Green sum", "sum": float(s)})
    certified = not failures
    eigs = eigensolve(outer, seed) if eigs is None else eigs
    true = float(np.min(np.abs(eigenvalues(eigs) - z0)))
    return CoveringReport((a, b), z0, certified, gap if certified else 0.0, float(radius), true,
                          (true >= gap) if certified else True, failures,
                          [c.to_dict() for c in checks], exponents.to_dict())
