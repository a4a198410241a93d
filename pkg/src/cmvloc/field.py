"""Analytic Verblunsky sampling functions alpha: T^d -> D.

Fields are finite trigonometric polynomials
    alpha(x) = sum_k c_k exp(2 pi i k.x)
together with an analyticity width h.  The strip bound sup_{|Im x| < h}|alpha| < 1
is certified by the coefficient sum  sum_k |c_k| exp(2 pi |k| h) < 1, where
|k| is the l1 norm of k.
"""
from dataclasses import dataclass, field
import json

import numpy as np

from .errors import CmvError
from .torus import as_phase


@dataclass(frozen=True)
class TrigPolynomial:
    coefficients: dict
    degree_bound: int = field(default=None)

    def __post_init__(self):
        coeffs = {}
        dims = set()
        for k, c in self.coefficients.items():
            k = tuple(int(v) for v in np.atleast_1d(k))
            dims.add(len(k))
            if c != 0:
                coeffs[k] = coeffs.get(k, 0j) + complex(c)
        if len(dims) > 1:
            raise CmvError("invalid-argument", "mixed dimensions in coefficient keys")
        deg = max((sum(map(abs, k)) for k in coeffs), default=0)
        if self.degree_bound is None:
            object.__setattr__(self, "degree_bound", deg)
        elif deg > self.degree_bound:
            raise CmvError("invalid-argument", f"coefficient of degree {deg} exceeds bound {self.degree_bound}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "_d", dims.pop() if dims else None)

    @property
    def d(self):
        return self._d

    def arrays(self):
        """(K, d) integer frequencies and (K,) complex coefficients."""
        if not self.coefficients:
            return np.zeros((0, self._d or 1), dtype=int), np.zeros(0, complex)
        ks = np.array(list(self.coefficients.keys()), dtype=int)
        cs = np.array(list(self.coefficients.values()), dtype=complex)
        return ks, cs

    def __call__(self, x, y=None):
        """Evaluate on an (N, d) array of real parts (and optional imaginary parts)."""
        ks, cs = self.arrays()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if len(cs) == 0:
            return np.zeros(x.shape[0], complex)
        arg = x @ ks.T.astype(float)
        out = np.exp(2j * np.pi * arg)
        if y is not None:
            y = np.atleast_2d(np.asarray(y, dtype=float))
            out = out * np.exp(-2 * np.pi * (y @ ks.T.astype(float)))
        return out @ cs


def certificate_sum(poly, h):
    ks, cs = poly.arrays()
    return float(np.sum(np.abs(cs) * np.exp(2 * np.pi * np.abs(ks).sum(axis=1) * h)))


@dataclass(frozen=True)
class VerblunskyField:
    poly: TrigPolynomial
    h: float
    d: int = field(default=None)
    sup_norm_h: float = field(init=False)
    c_alpha: float = field(init=False)

    def __post_init__(self):
        if not self.h > 0:
            raise CmvError("invalid-field", "analyticity width h must be positive")
        d = self.d if self.d is not None else self.poly.d
        if d is None:
            raise CmvError("invalid-field", "dimension of a zero field must be given explicitly")
        if self.poly.d is not None and self.poly.d != d:
            raise CmvError("invalid-field", f"coefficients have dimension {self.poly.d}, expected {d}")
        object.__setattr__(self, "d", int(d))
        cert = certificate_sum(self.poly, self.h)
        if not cert < 1.0:
            raise CmvError("invalid-field", f"coefficient certificate {cert:.17g} >= 1", certificate=cert)
        # the certificate bounds sup|alpha| on the strip, so it serves as ||alpha||_h
        object.__setattr__(self, "sup_norm_h", cert)
        object.__setattr__(self, "c_alpha", float(np.log(2.0 / np.sqrt(1.0 - cert * cert))))

    @classmethod
    def from_coeffs(cls, coeffs, h, d=None):
        return cls(TrigPolynomial(dict(coeffs)), h, d)

    @classmethod
    def constant(cls, value, d=1, h=1.0):
        return cls(TrigPolynomial({(0,) * d: value}), h, d)

    @classmethod
    def zero(cls, d=1, h=1.0):
        return cls(TrigPolynomial({}), h, d)

    def values(self, x, y=None):
        """Vectorized evaluation at an (N, d) array of phases."""
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        if y is not None:
            y = np.asarray(y, dtype=float).reshape(-1, self.d)
            if np.max(np.abs(y), initial=0.0) >= self.h:
                raise CmvError("out-of-strip", f"|Im x| must stay below h={self.h}")
        return self.poly(x, y)

    def to_dict(self):
        ks, cs = self.poly.arrays()
        return {
            "h": self.h,
            "d": self.d,
            "coeffs": [{"k": [int(v) for v in k], "re": float(c.real), "im": float(c.imag)}
                       for k, c in zip(ks, cs)],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            coeffs = {tuple(e["k"]): complex(e.get("re", 0.0), e.get("im", 0.0)) for e in data["coeffs"]}
            h = float(data["h"])
        except (KeyError, TypeError) as exc:
            raise CmvError("invalid-field", f"malformed field spec: {exc}")
        return cls(TrigPolynomial(coeffs), h, data.get("d"))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def evaluate(field, x):
    """alpha(x + iy) at a single Phase."""
    x = as_phase(x)
    y = None if x.is_real else np.array(x.y)
    return complex(field.values(np.array(x.x), y)[0])


def rho(field, x):
    x = as_phase(x)
    if not x.is_real:
        raise CmvError("invalid-argument", "rho is defined for real phases")
    a = field.values(np.array(x.x))[0]
    return float(np.sqrt(1.0 - abs(a) ** 2))


def rho_values(alpha):
    return np.sqrt(np.maximum(0.0, 1.0 - np.abs(alpha) ** 2))


@dataclass(frozen=True)
class Truncation:
    poly: TrigPolynomial
    degree: int
    error_bound: float
    grid_error: float


def truncate(field, n, cap_constant=1.0, grid=512):
    """Drop Fourier modes until the tail sum is below exp(-n^2).

    The degree cap is cap_constant * n^4.  error_bound is the rigorous tail sum
    sum_{|k| > degree}|c_k|; grid_error is the measured sup of |alpha - alpha~| on
    a grid (grid points per axis for d = 1, grid points along a Kronecker line otherwise).
    """
    if n < 1:
        raise CmvError("invalid-argument", "n must be >= 1")
    target = np.exp(-float(n) ** 2)
    cap = int(cap_constant * n ** 4)
    ks, cs = field.poly.arrays()
    deg = np.abs(ks).sum(axis=1) if len(cs) else np.zeros(0, int)
    for D in range(0, min(cap, field.poly.degree_bound) + 1):
        tail = float(np.sum(np.abs(cs[deg > D])))
        if tail <= target:
            break
    else:
        D = min(cap, field.poly.degree_bound)
        tail = float(np.sum(np.abs(cs[deg > D])))
        if tail > target:
            raise CmvError("accuracy-unreachable", f"tail {tail:.3e} > exp(-n^2) at degree cap {cap}",
                           achieved=tail, degree=D)
    poly = TrigPolynomial({tuple(k): c for k, c, g in zip(ks, cs, deg) if g <= D}, degree_bound=D)
    pts = _sample_grid(field.d, grid)
    err = float(np.max(np.abs(field.poly(pts) - poly(pts)))) if len(cs) else 0.0
    return Truncation(poly, D, tail, err)


def _sample_grid(d, count):
    from .torus import phase_grid_array
    if d == 1:
        return (np.arange(count) / count)[:, None]
    return phase_grid_array(d, count, seed=0)


def log_integrability(field, grid_size):
    """Rectangle-rule estimate of the integral of log(1 - |alpha(x)|) over T^d.

    The rule is spectrally accurate for smooth periodic integrands.  Uses a
    tensor grid with grid_size points per axis, evaluated in chunks.
    """
    if grid_size < 2:
        raise CmvError("invalid-argument", "grid_size must be >= 2")
    axis = np.arange(grid_size) / grid_size
    if field.d == 1:
        return float(np.mean(np.log1p(-np.abs(field.values(axis[:, None])))))
    total = 0.0
    count = 0
    # iterate over the first coordinate, vectorize the rest
    rest = np.stack(np.meshgrid(*([axis] * (field.d - 1)), indexing="ij"), -1).reshape(-1, field.d - 1)
    for x1 in axis:
        pts = np.column_stack([np.full(len(rest), x1), rest])
        total += float(np.sum(np.log1p(-np.abs(field.values(pts)))))
        count += len(rest)
    return total / count
