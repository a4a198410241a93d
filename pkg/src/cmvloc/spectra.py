"""Spectra of finite CMV blocks and the diagnostics built on them."""
from dataclasses import dataclass
import csv
import io
import math

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .banded import band_solve, compact_from_diagonals
from .cmv import DetValue, char_det_lu
from .errors import CmvError

TWO_PI = 2 * np.pi
ROTATION_ATTEMPTS = 8


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float

    @property
    def theta(self):
        return float(np.mod(np.angle(self.value), TWO_PI))


@dataclass(frozen=True)
class SpectralWindow:
    center: complex
    radius: float
    members: tuple = ()

    @classmethod
    def around(cls, eigs, center, radius):
        vals = np.array([e.value for e in eigs])
        idx = np.nonzero(np.abs(vals - center) < radius)[0] if len(vals) else []
        return cls(complex(center), float(radius), tuple(int(i) for i in idx))


@numba.njit(cache=True)
def jacobi_hermitian(A, tol=1e-15, max_sweeps=60):
    """Cyclic Jacobi for a complex Hermitian matrix (overwritten).

    Returns (eigenvalues, eigenvectors as columns, sweeps used).
    """
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += A[i, j].real ** 2 + A[i, j].imag ** 2
    fro = math.sqrt(fro)
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += abs(A[p, q]) ** 2
        if math.sqrt(2.0 * off) <= tol * fro:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                if g < 1e-300 or g <= 1e-18 * math.sqrt(abs(app * aqq)):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * g)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                eb = (apq / g).conjugate()
                gpp = c + 0j
                gpq = s + 0j
                gqp = -s * eb
                gqq = c * eb
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = akp * gpp + akq * gqp
                    A[k, q] = akp * gpq + akq * gqq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = gpp.conjugate() * apk + gqp.conjugate() * aqk
                    A[q, k] = gpq.conjugate() * apk + gqq.conjugate() * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = vkp * gpp + vkq * gqp
                    V[k, q] = vkp * gpq + vkq * gqq
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i].real
    return w, V, sweeps


def _phase_fix(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _refine(r, E, z, v, others):
    """Rayleigh quotient plus one inverse-iteration step for well separated eigenvalues."""
    res0 = float(np.linalg.norm(E @ v - z * v))
    gap = float(np.min(np.abs(others - z))) if len(others) else np.inf
    if gap > 1e-6 and res0 > 0:
        diags = r.band.copy()
        shift = z * (1.0 + 1e-14j)
        diags[:, 2] -= shift
        w = band_solve(compact_from_diagonals(diags, 2, 2), 2, 2, v[:, None].astype(complex))[:, 0]
        if np.all(np.isfinite(w)) and np.linalg.norm(w) > 0:
            w = w / np.linalg.norm(w)
            zw = np.vdot(w, E @ w)
            zw = zw / abs(zw)
            res1 = float(np.linalg.norm(E @ w - zw * w))
            if res1 < res0:
                return zw, w, res1
    zr = np.vdot(v, E @ v)
    zr = zr / abs(zr)
    res = float(np.linalg.norm(E @ v - zr * v))
    if res <= res0:
        return zr, v, res
    return z, v, res0


def eigensolve(r, seed=0, refine=True):
    """All eigenpairs of the unitary block through the Cayley transform.

    U <- e^{i phi} E with phi from a seeded RNG; S = i (I+U)^{-1}(I-U) is Hermitian with
    eigenvalues tan(theta/2); the rotation is retried until the spectrum of U stays
    away from -1.  Eigenvalues are returned sorted by argument in [0, 2 pi).
    """
    E = r.dense()
    n = r.n
    if n == 1:
        return [EigenPair(complex(E[0, 0]), np.ones(1, complex), 0.0)]
    rng = np.random.default_rng(seed)
    I = np.eye(n)
    for attempt in range(ROTATION_ATTEMPTS):
        phi = rng.uniform(0.0, TWO_PI)
        rot = np.exp(1j * phi)
        U = rot * E
        try:
            S = 1j * np.linalg.solve(I + U, I - U)
        except np.linalg.LinAlgError:
            continue
        S = 0.5 * (S + S.conj().T)
        # ||S|| ~ 2/dist(-1, spec U); reject if -1 sits too close to the spectrum
        if np.all(np.isfinite(S)) and np.linalg.norm(S) <= 8.0 * n:
            break
    else:
        raise CmvError("cayley-breakdown", f"no admissible rotation in {ROTATION_ATTEMPTS} attempts")
    s, V, _ = jacobi_hermitian(np.ascontiguousarray(S))
    vals = (1j - s) / (1j + s) / rot
    vals = vals / np.abs(vals)
    pairs = []
    for j in range(n):
        v = V[:, j] / np.linalg.norm(V[:, j])
        z = vals[j]
        if refine:
            z, v, res = _refine(r, E, z, v, np.delete(vals, j))
        else:
            res = float(np.linalg.norm(E @ v - z * v))
        pairs.append(EigenPair(complex(z), _phase_fix(v), res))
    pairs.sort(key=lambda e: e.theta)
    return pairs


def eigenvalues(eigs):
    return np.array([e.value for e in eigs])


def eigenvectors(eigs):
    return np.column_stack([e.vector for e in eigs])


def separation(eigs, j):
    vals = eigenvalues(eigs)
    if len(vals) < 2:
        raise CmvError("invalid-argument", "separation needs at least two eigenpairs")
    d = np.abs(vals - vals[j])
    d[j] = np.inf
    return float(d.min())


def log_product(values):
    """(log|prod|, phase) of a sequence of complex factors."""
    values = np.asarray(values, complex)
    if np.any(values == 0):
        return DetValue(-np.inf, 1.0 + 0j)
    ph = np.prod(values / np.abs(values)) if len(values) else 1.0 + 0j
    return DetValue(float(np.sum(np.log(np.abs(values)))), complex(ph / abs(ph)))


def resultant_window(eigs_a, eigs_b, window):
    """prod (z_i - z_j) over the members of A and B inside the window."""
    za = eigenvalues(eigs_a)
    zb = eigenvalues(eigs_b)
    ia = np.abs(za - window.center) < window.radius if len(za) else np.zeros(0, bool)
    ib = np.abs(zb - window.center) < window.radius if len(zb) else np.zeros(0, bool)
    diffs = (za[ia][:, None] - zb[ib][None, :]).ravel()
    return log_product(diffs)


def sylvester_resultant(f, g):
    """Res(f, g) from the Sylvester matrix; f, g coefficient arrays, highest power first."""
    f = np.trim_zeros(np.asarray(f, complex), "f")
    g = np.trim_zeros(np.asarray(g, complex), "f")
    k, m = len(f) - 1, len(g) - 1
    S = np.zeros((k + m, k + m), complex)
    for i in range(m):
        S[i, i:i + k + 1] = f
    for i in range(k):
        S[m + i, i:i + m + 1] = g
    return complex(np.linalg.det(S)) if k + m else 1.0 + 0j


def root_resultant(f, g):
    f = np.trim_zeros(np.asarray(f, complex), "f")
    g = np.trim_zeros(np.asarray(g, complex), "f")
    k, m = len(f) - 1, len(g) - 1
    zf, zg = np.roots(f), np.roots(g)
    return complex(f[0] ** m * g[0] ** k * np.prod((zf[:, None] - zg[None, :]).ravel()))


def disk_grid(count=256, radius=1.0):
    """16 x 16 polar grid on the closed disk of the given radius."""
    side = int(round(np.sqrt(count)))
    rad = radius * np.arange(side) / (side - 1)
    ang = TWO_PI * (np.arange(side) + 0.5) / side
    return (rad[:, None] * np.exp(1j * ang)[None, :]).ravel()


@dataclass(frozen=True)
class ResultantFloor:
    resultant: complex
    sylvester: complex
    s: int
    r: float
    delta: float
    applies: bool
    floor: float
    min_max: float
    holds: bool

    def to_dict(self):
        d = dict(self.__dict__)
        d["resultant"] = [self.resultant.real, self.resultant.imag]
        d["sylvester"] = [self.sylvester.real, self.sylvester.imag]
        return d


def resultant_floor_check(f, g, delta, grid=None):
    """If |Res(f,g)| > delta and all roots have modulus <= 1/2, then
    max(|f|, |g|) > (delta/2)^s everywhere, s = max(deg f, deg g).

    f, g are coefficient arrays with the highest power first.
    """
    if not 0 < delta < 1:
        raise CmvError("invalid-argument", "delta must lie in (0,1)")
    f = np.trim_zeros(np.asarray(f, complex), "f")
    g = np.trim_zeros(np.asarray(g, complex), "f")
    roots = np.concatenate([np.roots(f), np.roots(g)])
    r = float(np.max(np.abs(roots))) if len(roots) else 0.0
    if r > 0.5:
        raise CmvError("hypothesis-violated", f"root modulus {r:.6g} > 1/2")
    s = max(len(f), len(g)) - 1
    res = root_resultant(f, g)
    syl = sylvester_resultant(f, g)
    pts = disk_grid() if grid is None else np.asarray(grid, complex)
    mm = float(np.min(np.maximum(np.abs(np.polyval(f, pts)), np.abs(np.polyval(g, pts)))))
    applies = abs(res) > delta
    floor = (delta / 2) ** s
    return ResultantFloor(res, syl, s, r, delta, applies, floor, mm, (not applies) or mm > floor)


def weierstrass_split(r, window, z, eigs=None):
    """logP = sum over window members of log|z - z_j|, logG = log|phi(z)| - logP."""
    det = char_det_lu(r, z)
    if det.log_modulus == -np.inf:
        raise CmvError("singular-resolvent", f"z = {z} is an eigenvalue")
    if eigs is None:
        members = np.array([], complex)
    else:
        vals = eigenvalues(eigs)
        members = vals[list(window.members)] if window.members else vals[np.abs(vals - window.center) < window.radius]
    logP = float(np.sum(np.log(np.abs(z - members)))) if len(members) else 0.0
    return logP, det.log_modulus - logP


@dataclass(frozen=True)
class MatchReport:
    eps_tilde: float
    index: int
    nearest_index: int
    distance: float
    overlap: float
    overlap_floor: float
    part_a: bool
    eps_hat: float = None
    window_count: int = None
    vector_distance: float = None
    vector_bound: float = None
    part_b: bool = None
    assumptions: tuple = ()

    def to_dict(self):
        return dict(self.__dict__)


def approx_eigen_match(r, phi, z, eigs=None, eps_hat=None, seed=0):
    """Approximate-eigenvector lemma: with eps~ = ||(E - z) phi||, some eigenpair has
    |z0 - z| <= sqrt(2) eps~ and overlap >= (2N)^{-1/2}; if only one eigenvalue lies
    within eps^ of z, that eigenvector is within sqrt(2) eps~/eps^ of phi."""
    phi = np.asarray(phi, complex)
    if abs(np.linalg.norm(phi) - 1.0) > 1e-12:
        raise CmvError("invalid-argument", "phi must be a unit vector")
    eigs = eigensolve(r, seed) if eigs is None else eigs
    E = r.dense()
    eps = float(np.linalg.norm(E @ phi - z * phi))
    vals = eigenvalues(eigs)
    dist = np.abs(vals - z)
    overlaps = np.abs(eigenvectors(eigs).conj().T @ phi)
    N = r.n
    cand = np.nonzero(dist <= np.sqrt(2.0) * eps + 1e-15)[0]
    if len(cand) == 0:
        raise CmvError("corollary-violated", "no eigenvalue within sqrt(2) eps of z", eps=eps)
    j = int(cand[np.argmax(overlaps[cand])])
    floor = (2.0 * N) ** -0.5
    part_a = bool(overlaps[j] >= floor)
    if not part_a:
        raise CmvError("corollary-violated", "no candidate with overlap >= (2N)^{-1/2}", eps=eps)
    out = dict(eps_tilde=eps, index=j, nearest_index=int(np.argmin(dist)), distance=float(dist[j]),
               overlap=float(overlaps[j]), overlap_floor=floor, part_a=part_a)
    if eps_hat is not None:
        inside = np.nonzero(dist < eps_hat)[0]
        vd = None
        bound = np.sqrt(2.0) * eps / eps_hat
        ok = None
        if len(inside) == 1:
            k = int(inside[0])
            vd = float(np.sqrt(max(0.0, 2.0 - 2.0 * overlaps[k])))
            ok = bool(vd < bound)
        out.update(eps_hat=float(eps_hat), window_count=int(len(inside)), vector_distance=vd,
                   vector_bound=float(bound), part_b=ok,
                   assumptions=("one-dimensional eps_hat window certified by caller via separation",))
    return MatchReport(**out)


def matching_distance(za, zb):
    """Bottleneck optimal matching distance between two equal-size spectra."""
    za, zb = np.asarray(za, complex), np.asarray(zb, complex)
    if len(za) != len(zb):
        raise CmvError("invalid-argument", "spectra must have equal size")
    D = np.abs(za[:, None] - zb[None, :])
    levels = np.unique(D)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        g = csr_matrix(D <= levels[mid])
        if np.all(maximum_bipartite_matching(g, perm_type="column") >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def spectrum_csv(eigs):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "theta", "re_z", "im_z", "residual"])
    for i, e in enumerate(eigs):
        w.writerow([i, f"{e.theta:.17g}", f"{e.value.real:.17g}", f"{e.value.imag:.17g}", f"{e.residual:.17g}"])
    return buf.getvalue()
