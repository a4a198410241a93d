"""Szego cocycle, overflow-safe monodromy products, SL(2,R) conjugation,
finite-scale Lyapunov exponents and the avalanche-principle estimator."""
from dataclasses import dataclass, field
import math

import numba
import numpy as np

from .errors import CmvError
from .torus import Frequency, as_phase

LOG2 = math.log(2.0)
C_A = 16.0  # stand-in for the absolute constant of the avalanche principle

Q = -1.0 / (1.0 + 1.0j) * np.array([[1.0, -1.0j], [1.0, 1.0j]])
Q_STAR = Q.conj().T


def sqrt_branch(z):
    """Principal square root with arg z taken in [0, 2pi)."""
    theta = np.mod(np.angle(z), 2 * np.pi)
    return np.abs(z) ** 0.5 * np.exp(0.5j * theta)


def spectral_norm(a):
    """Closed-form largest singular value of (..., 2, 2) arrays, from the eigenvalues of a a*."""
    p = np.abs(a[..., 0, 0]) ** 2 + np.abs(a[..., 0, 1]) ** 2
    r = np.abs(a[..., 1, 0]) ** 2 + np.abs(a[..., 1, 1]) ** 2
    off = a[..., 0, 0] * np.conj(a[..., 1, 0]) + a[..., 0, 1] * np.conj(a[..., 1, 1])
    # (p - r)^2 + 4|off|^2 avoids the cancellation in (p + r)^2 - 4|det|^2
    disc = np.sqrt((p - r) ** 2 + 4.0 * np.abs(off) ** 2)
    return np.sqrt(0.5 * (p + r + disc))


def _renormalize(entries):
    """Exact power-of-two rescaling so the max entry modulus is in [1/2, 1)."""
    big = np.max(np.abs(entries), axis=(-2, -1))
    _, e = np.frexp(big)
    return np.ldexp(entries.real, -e[..., None, None]) + 1j * np.ldexp(entries.imag, -e[..., None, None]), e


@dataclass(frozen=True)
class Scaled2x2:
    """true matrix = exp(log_scale) * entries."""
    entries: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def of(cls, matrix, log_scale=0.0):
        m = np.asarray(matrix, dtype=complex)
        if not np.any(m):
            return cls(m, float("-inf"))
        ent, e = _renormalize(m)
        return cls(ent, float(log_scale + e * LOG2))

    def __matmul__(self, other):
        return Scaled2x2.of(self.entries @ other.entries, self.log_scale + other.log_scale)

    @property
    def log_norm(self):
        return float(self.log_scale + np.log(spectral_norm(self.entries)))

    def log_det(self):
        """(log|det|, phase) of the true matrix."""
        d = self.entries[0, 0] * self.entries[1, 1] - self.entries[0, 1] * self.entries[1, 0]
        return float(np.log(abs(d)) + 2 * self.log_scale), complex(d / abs(d))

    def matrix(self):
        return np.exp(self.log_scale) * self.entries


@dataclass(frozen=True)
class LdtExponents:
    sigma: float = 0.05
    tau: float = 0.25
    nu: float = 0.05
    c0: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "tau", "nu"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise CmvError("invalid-argument", f"{name} must lie in (0,1), got {v}")
        if not self.c0 > 0:
            raise CmvError("invalid-argument", "c0 must be positive")

    def to_dict(self):
        return {"sigma": self.sigma, "tau": self.tau, "nu": self.nu, "c0": self.c0}


@dataclass(frozen=True)
class LyapunovEstimate:
    n: int
    value: float
    std_error: float
    sample_count: int
    gamma_floor: float = field(default=None)

    def __post_init__(self):
        if self.gamma_floor is None:
            object.__setattr__(self, "gamma_floor", max(0.0, self.value - 3.0 * self.std_error))

    def to_dict(self):
        return {"n": self.n, "value": self.value, "std_error": self.std_error,
                "sample_count": self.sample_count, "gamma_floor": self.gamma_floor}


def check_verblunsky(alpha):
    if np.any(np.abs(alpha) >= 1.0):
        raise CmvError("invalid-verblunsky", "Verblunsky coefficient of modulus >= 1")


def step_matrices(alpha, z):
    """Unscaled one-step matrices M(alpha, z) for an array of alpha values."""
    alpha = np.asarray(alpha, dtype=complex)
    check_verblunsky(alpha)
    w = sqrt_branch(z)
    r = np.sqrt(1.0 - np.abs(alpha) ** 2)
    m = np.empty(alpha.shape + (2, 2), complex)
    m[..., 0, 0] = w / r
    m[..., 0, 1] = -np.conj(alpha) / w / r
    m[..., 1, 0] = -alpha * w / r
    m[..., 1, 1] = 1.0 / w / r
    return m


def one_step(alpha_value, z):
    """The Szego cocycle map (1/rho)[[sqrt z, -conj(a)/sqrt z], [-a sqrt z, 1/sqrt z]]."""
    if abs(abs(z) - 1.0) > 1e-12:
        raise CmvError("invalid-spectral-parameter", "one_step needs |z| = 1")
    return Scaled2x2.of(step_matrices(complex(alpha_value), z))


@numba.njit(cache=True)
def _monodromy_kernel(alpha, w):
    """Products M(alpha[:, n-1]) ... M(alpha[:, 0]) for each row, renormalized each step.

    Returns entries (N, 2, 2) and integer binary exponents (N,) such that
    true = entries * 2**exp, plus the accumulated log of 1/rho factors.
    """
    N, n = alpha.shape
    out = np.empty((N, 2, 2), np.complex128)
    expo = np.zeros(N, np.int64)
    logr = np.zeros(N)
    wi = 1.0 / w
    for s in range(N):
        a00 = 1.0 + 0j
        a01 = 0j
        a10 = 0j
        a11 = 1.0 + 0j
        e = 0
        lr = 0.0
        for k in range(n):
            al = alpha[s, k]
            # unnormalized step w*[[1, -conj(a) w^-2], [-a, w^-2]] ... kept as [[w, -conj(a)/w], [-a w, 1/w]]
            m00 = w
            m01 = -al.conjugate() * wi
            m10 = -al * w
            m11 = wi
            b00 = m00 * a00 + m01 * a10
            b01 = m00 * a01 + m01 * a11
            b10 = m10 * a00 + m11 * a10
            b11 = m10 * a01 + m11 * a11
            big = max(abs(b00), abs(b01), abs(b10), abs(b11))
            _, ex = math.frexp(big)
            a00 = complex(math.ldexp(b00.real, -ex), math.ldexp(b00.imag, -ex))
            a01 = complex(math.ldexp(b01.real, -ex), math.ldexp(b01.imag, -ex))
            a10 = complex(math.ldexp(b10.real, -ex), math.ldexp(b10.imag, -ex))
            a11 = complex(math.ldexp(b11.real, -ex), math.ldexp(b11.imag, -ex))
            e += ex
            lr += 0.5 * math.log1p(-(al.real * al.real + al.imag * al.imag))
        out[s, 0, 0] = a00
        out[s, 0, 1] = a01
        out[s, 1, 0] = a10
        out[s, 1, 1] = a11
        expo[s] = e
        logr[s] = lr
    return out, expo, logr


def monodromy_batch(alpha, z):
    """Monodromy over each row of an (N, n) array of coefficients.

    Returns (entries, log_scale) with true M_n = exp(log_scale) * entries.
    """
    alpha = np.ascontiguousarray(np.atleast_2d(alpha), dtype=complex)
    check_verblunsky(alpha)
    if abs(abs(z) - 1.0) > 1e-12:
        raise CmvError("invalid-spectral-parameter", "the Szego cocycle needs |z| = 1")
    ent, e, logr = _monodromy_kernel(alpha, complex(sqrt_branch(z)))
    return ent, e * LOG2 - logr


def field_alphas(field, omega, x, n, start=0):
    """alpha(x + k w) for k = start .. start+n-1, for one phase or an (N, d) array of phases."""
    om = omega.vector if isinstance(omega, Frequency) else np.asarray(omega, float)
    xs = np.asarray(x, dtype=float).reshape(-1, field.d)
    pts = xs[:, None, :] + np.arange(start, start + n)[None, :, None] * om[None, None, :]
    vals = field.values(np.mod(pts, 1.0).reshape(-1, field.d))
    return vals.reshape(xs.shape[0], n)


def transfer(field, omega, z, x, n):
    """M_n(x) = M(x + (n-1)w) ... M(x) in log-scaled form."""
    if n < 1:
        raise CmvError("invalid-argument", "n must be >= 1")
    x = as_phase(x)
    ent, ls = monodromy_batch(field_alphas(field, omega, np.array(x.x), n), z)
    return Scaled2x2(ent[0], float(ls[0]))


def log_norms(field, omega, z, xs, n, start=0):
    """log||M_n(x)|| for each row of an (N, d) array of phases."""
    ent, ls = monodromy_batch(field_alphas(field, omega, xs, n, start), z)
    return ls + np.log(spectral_norm(ent))


@dataclass(frozen=True)
class RealScaled:
    matrix: np.ndarray
    log_scale: float
    imag_residue: float
    det: float


def conjugate_sl2r(m, tol=1e-10):
    """Q* M Q, real for SU(1,1) input."""
    t = Q_STAR @ m.entries @ Q
    resid = float(np.max(np.abs(t.imag)))
    if resid > tol * max(1.0, float(np.max(np.abs(t)))):
        raise CmvError("not-su11", f"imaginary residue {resid:.3e} after conjugation", residue=resid)
    tr = t.real
    det = float((tr[0, 0] * tr[1, 1] - tr[0, 1] * tr[1, 0]) * np.exp(2 * m.log_scale))
    return RealScaled(tr, m.log_scale, resid, det)


def _sample_array(samples, d):
    if isinstance(samples, np.ndarray):
        return samples.reshape(-1, d)
    return np.array([as_phase(s).x for s in samples], dtype=float).reshape(-1, d)


def finite_lyapunov(field, omega, z, n, samples, gamma_floor=None):
    """Sample average of (1/n) log||M_n(x)|| with its standard error."""
    if n < 1:
        raise CmvError("invalid-argument", "n must be >= 1")
    xs = _sample_array(samples, field.d)
    if len(xs) == 0:
        raise CmvError("invalid-argument", "samples must be nonempty")
    u = np.maximum(log_norms(field, omega, z, xs, n), 0.0) / n
    val = float(np.mean(u))
    se = float(np.std(u, ddof=1) / np.sqrt(len(u))) if len(u) > 1 else 0.0
    return LyapunovEstimate(n, val, se, len(u), gamma_floor)


@dataclass(frozen=True)
class ApResult:
    reconstruction: float
    direct: float
    difference: float
    bound: float
    mu: float
    within_bound: bool
    constant: float = C_A

    def to_dict(self):
        return dict(self.__dict__)


def lyapunov_ap(field, omega, z, l, m, x):
    """Avalanche-principle reconstruction of log||B_m ... B_1||, B_j = M_l(x + (j-1) l w).

    Raises ap-hypothesis-violated with the failing conditions listed in details.
    """
    if l < 2 or m < 2:
        raise CmvError("invalid-argument", "need l, m >= 2")
    x = as_phase(x)
    om = omega.vector if isinstance(omega, Frequency) else np.asarray(omega, float)
    starts = np.array(x.x)[None, :] + (np.arange(m) * l)[:, None] * om[None, :]
    ent, ls = monodromy_batch(field_alphas(field, omega, np.mod(starts, 1.0), l), z)
    blocks = [Scaled2x2(ent[j], float(ls[j])) for j in range(m)]
    norms = np.array([b.log_norm for b in blocks])
    pairs = np.array([(blocks[j + 1] @ blocks[j]).log_norm for j in range(m - 1)])
    log_mu = float(norms.min())
    failures = []
    if log_mu < np.log(m):
        failures.append({"condition": "AP-1", "j": int(np.argmin(norms)) + 1,
                         "log_mu": log_mu, "log_m": float(np.log(m))})
    defects = norms[1:] + norms[:-1] - pairs
    bad = np.nonzero(defects >= 0.5 * log_mu)[0]
    if len(bad):
        failures.append({"condition": "AP-2", "j": [int(j) + 1 for j in bad],
                         "max_defect": float(defects.max()), "half_log_mu": 0.5 * log_mu})
    if failures:
        raise CmvError("ap-hypothesis-violated", "; ".join(f["condition"] for f in failures), failures=failures)
    prod = blocks[0]
    for b in blocks[1:]:
        prod = b @ prod
    direct = prod.log_norm
    recon = float(np.sum(pairs) - np.sum(norms[1:-1]))
    diff = abs(recon - direct)
    bound = C_A * m * float(np.exp(-log_mu))
    return ApResult(recon, direct, diff, bound, float(np.exp(log_mu)), diff < bound)
