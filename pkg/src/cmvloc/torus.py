"""Frequencies, phases and shift orbits on the torus T^d = R^d / Z^d."""
from dataclasses import dataclass, field
import itertools

import numpy as np

from .errors import CmvError


def frac(x):
    """Representative of x mod 1 in [0, 1)."""
    r = np.mod(x, 1.0)
    # np.mod can return exactly 1.0 for tiny negative inputs
    return np.where(r >= 1.0, 0.0, r)


def dist_to_int(x):
    """||x||, the distance to the nearest integer."""
    f = frac(x)
    return np.minimum(f, 1.0 - f)


@dataclass(frozen=True)
class Frequency:
    omega: tuple
    p: float = 1.0
    q: float = 3.0

    def __post_init__(self):
        om = tuple(float(v) for v in np.atleast_1d(self.omega))
        if not om:
            raise CmvError("invalid-argument", "frequency needs d >= 1")
        if any(not (0.0 <= v < 1.0) for v in om):
            raise CmvError("invalid-argument", f"omega coordinates must lie in [0,1): {om}")
        if self.p <= 0 or self.q <= len(om):
            raise CmvError("invalid-argument", f"need p > 0 and q > d (p={self.p}, q={self.q}, d={len(om)})")
        object.__setattr__(self, "omega", om)

    @property
    def d(self):
        return len(self.omega)

    @property
    def vector(self):
        return np.array(self.omega)


@dataclass(frozen=True)
class Phase:
    x: tuple
    y: tuple = field(default=None)

    def __post_init__(self):
        x = tuple(float(v) for v in frac(np.atleast_1d(np.asarray(self.x, dtype=float))))
        object.__setattr__(self, "x", x)
        if self.y is None:
            object.__setattr__(self, "y", (0.0,) * len(x))
        else:
            y = tuple(float(v) for v in np.atleast_1d(self.y))
            if len(y) != len(x):
                raise CmvError("invalid-argument", "x and y must have the same dimension")
            object.__setattr__(self, "y", y)

    @property
    def d(self):
        return len(self.x)

    @property
    def is_real(self):
        return not any(self.y)

    def shifted(self, omega, n=1):
        om = omega.vector if isinstance(omega, Frequency) else np.asarray(omega, float)
        return Phase(np.asarray(self.x) + n * om, self.y)


def as_phase(x):
    return x if isinstance(x, Phase) else Phase(x)


def _lattice(d, k_max):
    """All nonzero k in Z^d with l1 norm <= k_max, one representative per +-k pair."""
    rng = range(-k_max, k_max + 1)
    ks = np.array([k for k in itertools.product(rng, repeat=d) if 0 < sum(map(abs, k)) <= k_max])
    # k and -k give the same ||k.omega||
    first = np.array([next(v for v in k if v != 0) for k in ks])
    return ks[first > 0]


def diophantine_margin(omega, k_max):
    """min over 0 < |k| <= k_max of ||k.omega|| |k|^q, with |k| the l1 norm."""
    if k_max < 1:
        raise CmvError("invalid-argument", "k_max must be >= 1")
    ks = _lattice(omega.d, int(k_max))
    norms = np.abs(ks).sum(axis=1)
    return float(np.min(dist_to_int(ks @ omega.vector) * norms.astype(float) ** omega.q))


def orbit(x0, omega, n):
    """(x0, x0+w, ..., x0+(n-1)w) mod 1."""
    if n < 1:
        raise CmvError("invalid-argument", "n must be >= 1")
    x0 = as_phase(x0)
    pts = orbit_array(x0.x, omega, n)
    return [Phase(p, x0.y) for p in pts]


def orbit_array(x0, omega, n, start=0):
    """Orbit as an (n, d) array of real parts; row i is x0 + (start+i) w mod 1."""
    om = omega.vector if isinstance(omega, Frequency) else np.asarray(omega, float)
    steps = np.arange(start, start + n, dtype=float)[:, None]
    return frac(np.asarray(x0, float)[None, :] + steps * om[None, :])


# Kronecker generator: fractional parts of sqrt of the first primes
_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def kronecker_generator(d):
    if d > len(_PRIMES):
        raise CmvError("invalid-argument", f"phase_grid supports d <= {len(_PRIMES)}")
    return frac(np.sqrt(np.array(_PRIMES[:d], dtype=float)))


def phase_grid_array(d, count, seed=0):
    """Kronecker sequence {x_s + i g}, i = 1..count, as a (count, d) array.

    The seed picks the start point x_s (itself a Kronecker point) so that
    different seeds give shifted but equally well distributed sequences.
    """
    if d < 1:
        raise CmvError("invalid-argument", "d must be >= 1")
    if count < 1:
        raise CmvError("invalid-argument", "count must be >= 1")
    g = kronecker_generator(d)
    start = frac(0.5 + (seed * 0.7548776662466927) * np.ones(d) + seed * g[::-1])
    i = np.arange(1, count + 1, dtype=float)[:, None]
    return frac(start[None, :] + i * g[None, :])


def phase_grid(d, count, seed=0):
    return [Phase(p) for p in phase_grid_array(d, count, seed)]
