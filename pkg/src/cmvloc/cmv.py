"""Finite boundary-modified CMV blocks E^{beta,eta}_{[a,b]} = (LM)|_{[a,b]}.

Convention: the modified sequence is
    a^_{a-1} = beta,  a^_n = alpha(x + n w) for a <= n <= b-1,  a^_b = eta,
and L (resp. M) is the direct sum of Theta_k = [[conj a^_k, rho_k], [rho_k, -a^_k]]
over even (resp. odd) k, acting on sites (k, k+1), cut down to [a, b].
A block straddling an edge collapses to the scalar -a^ (rho^ = 0 there).

Determinants are carried as (log-modulus, unit phase) pairs.
"""
from dataclasses import dataclass, field
import json

import numpy as np

from .banded import band_logdet, band_solve, compact_from_dense, compact_from_diagonals
from .cocycle import field_alphas, monodromy_batch, sqrt_branch, transfer, conjugate_sl2r
from .errors import CmvError
from .torus import as_phase

UNIT_TOL = 1e-14


@dataclass(frozen=True)
class DetValue:
    log_modulus: float
    phase: complex

    @property
    def value(self):
        return np.exp(self.log_modulus) * self.phase

    def __mul__(self, other):
        return DetValue(self.log_modulus + other.log_modulus, self.phase * other.phase)


@dataclass(frozen=True)
class ThetaBlock:
    alpha: complex

    def __post_init__(self):
        if abs(self.alpha) > 1.0 + UNIT_TOL:
            raise CmvError("invalid-verblunsky", f"|alpha| = {abs(self.alpha)} > 1")

    @property
    def rho(self):
        return float(np.sqrt(max(0.0, 1.0 - abs(self.alpha) ** 2)))

    @property
    def matrix(self):
        a = complex(self.alpha)
        r = self.rho
        return np.array([[a.conjugate(), r], [r, -a]])


@dataclass(frozen=True)
class BoundaryPair:
    beta: complex = 1.0
    eta: complex = 1.0

    def __post_init__(self):
        for name in ("beta", "eta"):
            v = complex(getattr(self, name))
            if abs(abs(v) - 1.0) > UNIT_TOL:
                raise CmvError("invalid-boundary", f"{name} must be unimodular, |{name}| = {abs(v)!r}")
            object.__setattr__(self, name, v)

    def to_dict(self):
        return {"beta": [self.beta.real, self.beta.imag], "eta": [self.eta.real, self.eta.imag]}


def _factors(alphas, a):
    """Dense restricted L and M from a^ on [a-1, b] (alphas has length b-a+2)."""
    n = len(alphas) - 1
    b = a + n - 1
    L = np.zeros((n, n), complex)
    M = np.zeros((n, n), complex)
    for k in range(a - 1, b + 1):
        t = ThetaBlock(alphas[k - a + 1]).matrix
        tgt = L if k % 2 == 0 else M
        for i, si in enumerate((k, k + 1)):
            if not a <= si <= b:
                continue
            for j, sj in enumerate((k, k + 1)):
                if a <= sj <= b:
                    tgt[si - a, sj - a] = t[i, j]
    return L, M


def _diagonals(E):
    """(n, 5) array with column d+2 holding E[i, i+d]."""
    n = E.shape[0]
    out = np.zeros((n, 5), complex)
    for d in range(-2, 3):
        i = np.arange(max(0, -d), min(n, n - d))
        out[i, d + 2] = E[i, i + d]
    return out


@dataclass(frozen=True, eq=False)
class CmvRestriction:
    a: int
    b: int
    alphas: np.ndarray          # a^ on [a-1, b]
    boundary: BoundaryPair = None
    L: np.ndarray = field(init=False, repr=False)
    M: np.ndarray = field(init=False, repr=False)
    band: np.ndarray = field(init=False, repr=False)
    unitarity_defect: float = field(init=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.b < self.a:
            raise CmvError("invalid-argument", "need b >= a")
        al = np.asarray(self.alphas, complex).copy()
        if len(al) != self.b - self.a + 2:
            raise CmvError("invalid-argument", "alphas must cover [a-1, b]")
        al.setflags(write=False)
        object.__setattr__(self, "alphas", al)
        L, M = _factors(al, self.a)
        E = L @ M
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "band", _diagonals(E))
        defect = float(np.linalg.norm(E.conj().T @ E - np.eye(len(E))))
        object.__setattr__(self, "unitarity_defect", defect)
        self.metadata.setdefault("convention", "alpha_hat[a-1]=beta, alpha_hat[b]=eta")

    @property
    def n(self):
        return self.b - self.a + 1

    @property
    def sites(self):
        return np.arange(self.a, self.b + 1)

    def alpha(self, k):
        """a^_k for k in [a-1, b]."""
        if not self.a - 1 <= k <= self.b:
            raise CmvError("invalid-site", f"site {k} outside [{self.a - 1}, {self.b}]")
        return complex(self.alphas[k - self.a + 1])

    def rho(self, k):
        return float(np.sqrt(max(0.0, 1.0 - abs(self.alpha(k)) ** 2)))

    def dense(self):
        n = self.n
        E = np.zeros((n, n), complex)
        for d in range(-2, 3):
            i = np.arange(max(0, -d), min(n, n - d))
            E[i, i + d] = self.band[i, d + 2]
        return E

    def sub(self, a, b):
        """Plain restriction of this block to [a, b]: edge coefficients unchanged."""
        if not self.a <= a <= b <= self.b:
            raise CmvError("invalid-argument", f"[{a},{b}] not inside [{self.a},{self.b}]")
        return CmvRestriction(a, b, self.alphas[a - self.a: b - self.a + 2])

    def to_dict(self):
        diags = {}
        for d in range(-2, 3):
            i = np.arange(max(0, -d), min(self.n, self.n - d))
            diags[str(d)] = [[float(v.real), float(v.imag)] for v in self.band[i, d + 2]]
        return {"interval": [self.a, self.b],
                "boundary": self.boundary.to_dict() if self.boundary else None,
                "alphas": [[float(v.real), float(v.imag)] for v in self.alphas],
                "diagonals": diags, "metadata": self.metadata}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def restriction_from_alphas(alphas, a, boundary=None):
    return CmvRestriction(a, a + len(alphas) - 2, np.asarray(alphas, complex), boundary)


def modified_alphas(interior, boundary):
    """beta, interior..., eta."""
    return np.concatenate([[boundary.beta], np.asarray(interior, complex), [boundary.eta]])


def build_restriction(field, omega, x, a, b, boundary):
    if b < a:
        raise CmvError("invalid-argument", "need b >= a")
    if not isinstance(boundary, BoundaryPair):
        boundary = BoundaryPair(*boundary)
    x = as_phase(x)
    interior = field_alphas(field, omega, np.array(x.x), b - a, start=a)[0] if b > a else np.zeros(0, complex)
    r = CmvRestriction(a, b, modified_alphas(interior, boundary), boundary)
    r.metadata["phase"] = list(x.x)
    return r


def _compact_shifted(r, z):
    """Compact storage of z I - E."""
    diags = -r.band.copy()
    diags[:, 2] += z
    return compact_from_diagonals(diags, 2, 2)


def char_det_lu(r, z):
    """det(z - E) by banded LU with partial pivoting."""
    if r.n == 1:
        v = complex(z) - r.band[0, 2]
        return DetValue(float(np.log(abs(v))) if v != 0 else -np.inf, v / abs(v) if v != 0 else 1.0 + 0j)
    lm, ph = band_logdet(_compact_shifted(r, complex(z)), 2, 2)
    return DetValue(float(lm), complex(ph))


def principal_det(r, z, a, b):
    """det(z - E)[a..b, a..b]; empty interval gives 1."""
    if b < a:
        return DetValue(0.0, 1.0 + 0j)
    return char_det_lu(r.sub(a, b), z)


def transfer_det(interior, z, c_left, c_right):
    """det(z - E) of the restriction with coefficients c_left, interior..., c_right.

    Uses phi = [z, -conj(c_right)] S_{n-2} ... S_0 (1, -c_left)^T with the unnormalized
    steps S(a) = [[z, -conj a], [-a z, 1]] = rho sqrt(z) M(a).  The monodromy over the
    interior coefficients is taken in log-scaled normalized form.
    """
    interior = np.asarray(interior, complex)
    m = len(interior)
    if m:
        ent, ls = monodromy_batch(interior[None, :], z)
        ent, ls = ent[0], float(ls[0])
        log_rho = float(np.sum(0.5 * np.log1p(-np.abs(interior) ** 2)))
    else:
        ent, ls, log_rho = np.eye(2, dtype=complex), 0.0, 0.0
    v = ent @ np.array([1.0, -c_left])
    val = z * v[0] - np.conj(c_right) * v[1]
    if val == 0:
        return DetValue(-np.inf, 1.0 + 0j)
    w = sqrt_branch(z)
    return DetValue(float(np.log(abs(val)) + ls + log_rho), complex(val / abs(val) * w ** m))


def char_det_transfer(field, omega, z, x, n, boundary):
    """det(z - E^{beta,eta}_{[0,n-1]}) through the Szego cocycle (needs |z| = 1)."""
    if abs(abs(z) - 1.0) > 1e-12:
        raise CmvError("invalid-spectral-parameter", "the transfer route needs |z| = 1")
    if n < 1:
        raise CmvError("invalid-argument", "n must be >= 1")
    if not isinstance(boundary, BoundaryPair):
        boundary = BoundaryPair(*boundary)
    x = as_phase(x)
    interior = field_alphas(field, omega, np.array(x.x), n - 1)[0] if n > 1 else np.zeros(0, complex)
    return transfer_det(interior, complex(z), boundary.beta, boundary.eta)


def normalized_log_det(r, z, det=None):
    """log|phi| - sum of log rho over the interior coefficients a..b-1.

    This is the determinant normalized like the monodromy M_{n-1}: it is
    comparable with (n) L_n, while the raw determinant carries the extra
    factor prod rho_j.
    """
    det = det if det is not None else char_det_lu(r, z)
    interior = r.alphas[1:-1]
    return det.log_modulus - float(np.sum(0.5 * np.log1p(-np.abs(interior) ** 2)))


@dataclass(frozen=True)
class RecursionCheck:
    lhs: complex
    rhs: complex
    residual: float


def _minor_logdet(A, rows, cols):
    sub = A[np.ix_(rows, cols)]
    lm, ph = band_logdet(compact_from_dense(sub, 2, 2), 2, 2)
    return DetValue(float(lm), complex(ph))


def determinant_recursion(r, z):
    """phi_{[a,b]} = (z + conj(a_a) a_{a-1}) phi_{[a+1,b]} - rho_a a_{a-1} det P.

    phi_{[a+1,b]} is the minor of z - E without row/column a, P the matrix z - E with
    row a+1 and column a removed.  Returns the relative residual.
    """
    if r.n < 2:
        raise CmvError("invalid-argument", "recursion needs an interval of length >= 2")
    A = z * np.eye(r.n) - r.dense()
    rest = np.arange(1, r.n)
    phi0 = char_det_lu(r, z)
    phi1 = _minor_logdet(A, rest, rest)
    prow = np.concatenate([[0], np.arange(2, r.n)])
    detP = _minor_logdet(A, prow, rest)
    s = phi0.log_modulus
    a0, am1, r0 = r.alpha(r.a), r.alpha(r.a - 1), r.rho(r.a)
    lhs = phi0.phase
    t1 = (z + np.conj(a0) * am1) * np.exp(phi1.log_modulus - s) * phi1.phase
    t2 = r0 * am1 * np.exp(detP.log_modulus - s) * detP.phase
    rhs = t1 - t2
    scale = max(abs(lhs), abs(t1), abs(t2))
    return RecursionCheck(complex(lhs), complex(rhs), float(abs(lhs - rhs) / scale))


# polynomial forms ---------------------------------------------------------

def char_poly(interior, c_left, c_right):
    """Coefficients (ascending powers) of det(z - E) from the transfer recursion."""
    P = [np.array([1.0 + 0j]), np.array([0j]), np.array([0j]), np.array([1.0 + 0j])]  # identity
    for a in np.asarray(interior, complex):
        # S(a) = [[z, -conj a], [-a z, 1]]
        p00, p01, p10, p11 = P
        za = lambda p: np.concatenate([[0j], p])
        P = [_padd(za(p00), -np.conj(a) * p10), _padd(za(p01), -np.conj(a) * p11),
             _padd(-a * za(p00), p10), _padd(-a * za(p01), p11)]
    p00, p01, p10, p11 = P
    v0 = _padd(p00, -c_left * p01)
    v1 = _padd(p10, -c_left * p11)
    return _padd(np.concatenate([[0j], v0]), -np.conj(c_right) * v1)


def _padd(p, q):
    n = max(len(p), len(q))
    out = np.zeros(n, complex)
    out[: len(p)] += p
    out[: len(q)] += q
    return out


def szego_dual(coeffs, degree):
    """Q*(z) = z^deg conj(Q(1/conj z)) on coefficient arrays."""
    c = np.zeros(degree + 1, complex)
    c[: len(coeffs)] = coeffs
    return np.conj(c[::-1])


def poly_eval(coeffs, z):
    return np.polynomial.polynomial.polyval(z, coeffs)


@dataclass(frozen=True)
class Sl2rEntries:
    t: tuple                # t1, t2, t3, t4 (up to the common prefactor)
    log_prefactor: float    # log|(sqrt z)^{-n} prod rho_j^{-1}| relative to t
    prefactor_phase: complex
    assembled: np.ndarray   # the real matrix Q* M_n Q rebuilt from t, scaled by exp(-log_scale of transfer)
    reference: np.ndarray
    log_scale: float
    relative_error: float


def sl2r_entries(field, omega, z, x, n, boundary):
    """t1..t4 of Q* M_n Q from the characteristic determinants and their Szego duals.

    phi0 = det(z - E) on [0, n-1] with left coefficient a_{-1} = beta and right
    coefficient a_{n-1}; phi1 the same on [1, n-1] with left coefficient a_0.
    On |z| = 1 the dual of degree m is z^m conj(p(z)).
    """
    if abs(abs(z) - 1.0) > 1e-12:
        raise CmvError("invalid-spectral-parameter", "sl2r_entries needs |z| = 1")
    if n < 2:
        raise CmvError("invalid-argument", "n must be >= 2")
    if not isinstance(boundary, BoundaryPair):
        boundary = BoundaryPair(*boundary)
    x = as_phase(x)
    z = complex(z)
    al = field_alphas(field, omega, np.array(x.x), n)[0]
    beta = boundary.beta
    r0 = restriction_from_alphas(np.concatenate([[beta], al]), 0)
    r1 = r0.sub(1, n - 1)
    d0 = char_det_lu(r0, z)
    d1 = char_det_lu(r1, z)
    s = d1.log_modulus
    phi0 = np.exp(d0.log_modulus - s) * d0.phase
    phi1 = d1.phase
    p11 = z * phi1
    p12 = (z * phi1 - phi0) / beta
    p21 = z * z ** (n - 1) * np.conj(p12)
    p22 = z ** (n - 1) * np.conj(phi1)
    t1 = 0.5 * (p11 + p12 + p21 + p22)
    t2 = 0.5j * (-p11 + p12 - p21 + p22)
    t3 = 0.5j * (p11 + p12 - p21 - p22)
    t4 = 0.5 * (p11 - p12 - p21 + p22)
    w = sqrt_branch(z)
    log_rho = float(np.sum(0.5 * np.log1p(-np.abs(al) ** 2)))
    ref = transfer(field, omega, z, x, n)
    real = conjugate_sl2r(ref)
    # assembled = (sqrt z)^{-n} prod rho^{-1} exp(s) [[t1,t2],[t3,t4]], compared in ref's scale
    ph = w ** (-n)
    assembled = ph * np.exp(s - log_rho - ref.log_scale) * np.array([[t1, t2], [t3, t4]])
    err = float(np.max(np.abs(assembled - real.matrix)) / np.max(np.abs(real.matrix)))
    return Sl2rEntries((t1, t2, t3, t4), s - log_rho, ph, assembled, real.matrix, ref.log_scale, err)


# Green's function ------------------------------------------------------------

def resolvent_operator(r, z):
    """Dense tridiagonal z L* - M."""
    return z * r.L.conj().T - r.M


def _check_not_eigen(r, z):
    if char_det_lu(r, z).log_modulus == -np.inf:
        raise CmvError("singular-resolvent", f"z = {z} is an eigenvalue")


def greens_columns(r, z, columns):
    """Columns k (absolute site indices) of G = (z L* - M)^{-1}."""
    _check_not_eigen(r, z)
    T = compact_from_dense(resolvent_operator(r, z), 1, 1)
    rhs = np.zeros((r.n, len(columns)), complex)
    for s, k in enumerate(columns):
        rhs[k - r.a, s] = 1.0
    x = band_solve(T, 1, 1, rhs)
    if not np.all(np.isfinite(x)):
        raise CmvError("singular-resolvent", f"z = {z} makes z L* - M singular")
    return x


def greens_entry(r, j, k, z):
    """G(j, k) by a banded solve of (z L* - M) v = delta_k."""
    for s in (j, k):
        if not r.a <= s <= r.b:
            raise CmvError("invalid-site", f"site {s} outside [{r.a}, {r.b}]")
    return complex(greens_columns(r, z, [k])[j - r.a, 0])


def greens_ratio(r, j, k, z):
    """|G(j,k)| for j <= k, |z| = 1, from characteristic determinants:

        |G(j,k)| = prod_{i=j}^{k-1} rho_i |phi_{[a,j-1]} phi_{[k+1,b]} / phi_{[a,b]}|,

    phi_{[a,j-1]} keeping the left boundary and the coefficient a_{j-1} on the right,
    phi_{[k+1,b]} keeping a_k on the left and the right boundary.
    """
    if not r.a <= j <= k <= r.b:
        raise CmvError("invalid-site", "need a <= j <= k <= b")
    if abs(abs(z) - 1.0) > 1e-12:
        raise CmvError("invalid-spectral-parameter", "the determinant ratio holds on |z| = 1")
    full = char_det_lu(r, z)
    if full.log_modulus == -np.inf:
        raise CmvError("singular-resolvent", f"z = {z} is an eigenvalue")
    left = principal_det(r, z, r.a, j - 1)
    right = principal_det(r, z, k + 1, r.b)
    log_rho = sum(np.log(r.rho(i)) for i in range(j, k)) if k > j else 0.0
    return float(np.exp(log_rho + left.log_modulus + right.log_modulus - full.log_modulus))


# Poisson formula ---------------------------------------------------------------

def boundary_weights(sub, outer, z):
    """Coefficients of u in the two boundary terms of the Poisson formula.

    With E u = z u on `outer` and [a, b] = sub's interval,
        u(m) = G(m, a) r_a + G(m, b) r_b,  r_a = c[0] u(a) + c[1] u(a-1),  r_b = c[2] u(b) + c[3] u(b+1)
    where G is sub's Green's function.  Coefficients of u(a-1), u(b+1) vanish when the
    corresponding outer coefficient is unimodular.
    """
    a, b = sub.a, sub.b
    if not (outer.a <= a and b <= outer.b):
        raise CmvError("invalid-argument", "sub-interval must lie inside the outer interval")
    al_a, rh_a = outer.alpha(a - 1), outer.rho(a - 1)
    al_b, rh_b = outer.alpha(b), outer.rho(b)
    beta, eta = sub.alpha(a - 1), sub.alpha(b)
    if a % 2:
        ca = (z * (np.conj(al_a) - np.conj(beta)), -z * rh_a)
    else:
        ca = (beta - al_a, rh_a)
    if b % 2 == 0:
        cb = (z * (eta - al_b), -z * rh_b)
    else:
        cb = (np.conj(al_b) - np.conj(eta), rh_b)
    return np.array([ca[0], ca[1], cb[0], cb[1]], complex)


def poisson_rhs(sub, outer, u, z, m):
    """Right side of the Poisson formula at site m (any m in [a, b])."""
    u = np.asarray(u, complex)

    def uu(s):
        return u[s - outer.a] if outer.a <= s <= outer.b else 0.0

    c = boundary_weights(sub, outer, z)
    G = greens_columns(sub, z, [sub.a, sub.b])
    ra = c[0] * uu(sub.a) + c[1] * uu(sub.a - 1)
    rb = c[2] * uu(sub.b) + c[3] * uu(sub.b + 1)
    return G[m - sub.a, 0] * ra + G[m - sub.a, 1] * rb


def poisson_residual(sub, u, z, m, outer):
    """|u(m) - (G(m,a) r_a + G(m,b) r_b)| for an eigenpair (z, u) of `outer`."""
    if not sub.a < m < sub.b:
        raise CmvError("invalid-site", f"need a < m < b, got m={m} on [{sub.a},{sub.b}]")
    u = np.asarray(u, complex)
    if not np.any(u):
        return 0.0
    return float(abs(u[m - outer.a] - poisson_rhs(sub, outer, u, z, m)))
