"""Experiment configuration: parsing and validation of the JSON config files."""
from dataclasses import dataclass, field
import json
import math

import numpy as np

from .cmv import BoundaryPair
from .cocycle import LdtExponents
from .errors import CmvError
from .field import VerblunskyField, certificate_sum, TrigPolynomial
from .torus import Frequency, diophantine_margin

EXPERIMENTS = ("lyapunov", "ldt", "localize", "greens", "ndr", "continue-scales", "covering")


@dataclass
class ExperimentConfig:
    experiment: str
    field: VerblunskyField
    omega: Frequency
    z_grid: list
    scales: list
    boundary: BoundaryPair
    exponents: LdtExponents
    seed: int
    output_path: str
    params: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)
    k_max: int = 50
    raw: dict = field(default_factory=dict, repr=False)


def _complex(v, where):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise CmvError("invalid-config", f"{where}: expected a number or [re, im], got {v!r}")


def parse_z_grid(spec):
    """A list of [re, im] pairs, {"theta": [...]} or {"arc": {"start", "stop", "count"}}."""
    if spec is None:
        return [1.0 + 0j]
    if isinstance(spec, list):
        return [_complex(v, "z_grid") for v in spec]
    if isinstance(spec, dict) and "theta" in spec:
        return [complex(np.exp(1j * float(t))) for t in spec["theta"]]
    if isinstance(spec, dict) and "arc" in spec:
        a = spec["arc"]
        count = int(a.get("count", 1))
        start, stop = float(a.get("start", 0.0)), float(a.get("stop", 2 * math.pi))
        ts = start + (stop - start) * np.arange(count) / max(count, 1)
        return [complex(np.exp(1j * t)) for t in ts]
    raise CmvError("invalid-config", f"z_grid: unsupported spec {spec!r}")


def _field(spec):
    if not isinstance(spec, dict):
        raise CmvError("invalid-config", "field: expected an object")
    return VerblunskyField.from_dict(spec)


def _omega(spec):
    if not isinstance(spec, dict) or "omega" not in spec:
        raise CmvError("invalid-config", "omega: expected {\"omega\": [...], \"p\": .., \"q\": ..}")
    return Frequency(tuple(spec["omega"]), float(spec.get("p", 1.0)), float(spec.get("q", len(spec["omega"]) + 1.0)))


def from_dict(data):
    if not isinstance(data, dict):
        raise CmvError("invalid-config", "config must be a JSON object")
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        raise CmvError("invalid-config", f"experiment: expected one of {EXPERIMENTS}, got {exp!r}")
    for key in ("field", "omega"):
        if key not in data:
            raise CmvError("invalid-config", f"missing field {key!r}")
    fld = _field(data["field"])
    om = _omega(data["omega"])
    if om.d != fld.d:
        raise CmvError("invalid-config", f"omega has dimension {om.d}, field has {fld.d}")
    b = data.get("boundary", {})
    boundary = BoundaryPair(_complex(b.get("beta", 1.0), "boundary.beta"), _complex(b.get("eta", 1.0), "boundary.eta"))
    exponents = LdtExponents(**data.get("exponents", {}))
    scales = [int(s) for s in data.get("scales", [])]
    if any(s < 1 for s in scales):
        raise CmvError("invalid-config", "scales must be positive integers")
    zs = parse_z_grid(data.get("z_grid"))
    for z in zs:
        if abs(abs(z) - 1.0) > 1e-12:
            raise CmvError("invalid-config", f"z_grid point {z} is not unimodular")
    return ExperimentConfig(exp, fld, om, zs, scales, boundary, exponents, int(data.get("seed", 0)),
                            str(data.get("output_path", exp)), dict(data.get("params", {})),
                            dict(data.get("expect", {})), int(data["omega"].get("k_max", 50)), data)


def load(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CmvError("invalid-config", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise CmvError("invalid-config", f"{path}: {exc.strerror}")
    return from_dict(data)


def validate_dict(data):
    """Diagnostics without computation: (errors, warnings)."""
    errors, warnings = [], []
    try:
        json.dumps(data)
    except TypeError:
        errors.append("config is not JSON serializable")
        return errors, warnings
    fspec = data.get("field") if isinstance(data, dict) else None
    if isinstance(fspec, dict):
        try:
            poly = TrigPolynomial({tuple(e["k"]): complex(e.get("re", 0.0), e.get("im", 0.0)) for e in fspec["coeffs"]})
            cert = certificate_sum(poly, float(fspec["h"]))
            if not cert < 1:
                errors.append(f"field: coefficient certificate {cert:.17g} >= 1")
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"field: malformed ({exc})")
    try:
        cfg = from_dict(data)
    except CmvError as exc:
        msg = str(exc)
        if not any(msg.split(": ", 1)[-1] in e for e in errors):
            errors.append(msg)
        return errors, warnings
    margin = diophantine_margin(cfg.omega, cfg.k_max)
    if margin == 0:
        warnings.append(f"omega: zero Diophantine margin at k_max={cfg.k_max}")
    elif margin < cfg.omega.p:
        warnings.append(f"omega: margin {margin:.6g} below p={cfg.omega.p} at k_max={cfg.k_max}")
    return errors, warnings
