"""Run configuration: a flat ``key = value`` text format, ``QAE_*``
environment overrides and the frozen constants of the geometric bounds.

Precedence, lowest first: defaults, config file, environment, CLI flags.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

from .errors import ParseError, ResourceError, ValidationError
from .hermitian import Tolerances
from .machine import MAX_LENGTH_CAP, MAX_STEPS_CAP

ENV_PREFIX = "QAE_"

# s_n(α)/s_n ≤ C·exp(-n y²/2 + ln n): the Laplace bound with
# ∫_y^{π/2} e^{-(n-2)t²/2} dt ≤ (π/2)e^{y²}e^{-n y²/2}, y ≤ π/2, and the
# Γ prefactor ≤ n.
CAP_BOUND_C = (math.pi / 2) * math.exp(math.pi**2 / 4)
# Union of 2^k exact complex caps (1 - 2^{-m})^{2^n - 1} ≤ e^{-2^{n-m}+1}
# stays below exp(-2^{n-m} + k ln 2 + n) for n ≥ 1.
COUNTING_C = 1.0

SUITES = ("enumerate", "mu", "entropy", "tests", "clone", "caps", "kq-scenario")


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    budget: tuple[int, int] = (12, 10_000)
    eps_reg: Fraction = Fraction(1, 2**16)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    suites: tuple[str, ...] = ()
    output_path: str | None = None
    workers: int = 1
    samples: int = 1000
    fold: int = 2
    qubits: int = 4
    cap_bound_C: float = CAP_BOUND_C
    counting_C: float = COUNTING_C

    def validate(self) -> "RunConfig":
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        L, T = self.budget
        if L < 0 or T < 1:
            raise ValidationError(f"invalid budget {self.budget}")
        if L > MAX_LENGTH_CAP or T > MAX_STEPS_CAP:
            raise ResourceError(f"budget {self.budget} exceeds the hard caps ({MAX_LENGTH_CAP}, {MAX_STEPS_CAP})")
        if not 0 <= self.eps_reg < 1:
            raise ValidationError("eps_reg must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ValidationError(f"unknown suites {unknown}; choose from {list(SUITES)}")
        if self.workers < 1 or self.samples < 2 or self.fold < 1 or self.qubits < 1:
            raise ValidationError("workers, fold and qubits must be positive and samples >= 2")
        return self

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "tolerances":
                v = {t.name: getattr(v, t.name) for t in fields(v)}
            elif isinstance(v, Fraction):
                v = f"{v.numerator}/{v.denominator}"
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    def dumps(self) -> str:
        lines = []
        for key, v in self.to_dict().items():
            if key == "tolerances":
                lines.extend(f"{k} = {x!r}" for k, x in v.items())
            elif v is None:
                continue
            elif isinstance(v, list):
                lines.append(f"{key} = {','.join(str(x) for x in v)}")
            else:
                lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
        return "\n".join(lines) + "\n"


_TOL_KEYS = {f.name for f in fields(Tolerances)}


def _parse_value(key: str, text: str):
    text = text.strip()
    if key in ("dim", "seed", "workers", "samples", "fold", "qubits"):
        return int(text, 0)
    if key == "budget":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValueError("budget needs 'L,T'")
        return (int(parts[0]), int(parts[1]))
    if key == "eps_reg":
        return Fraction(text)
    if key == "suites":
        return tuple(s.strip() for s in text.split(",") if s.strip())
    if key == "output_path":
        return text or None
    if key in _TOL_KEYS or key in ("cap_bound_C", "counting_C"):
        return float(text)
    raise KeyError(key)


def apply_overrides(cfg: RunConfig, values: dict[str, str], source: str = "") -> RunConfig:
    changes = {}
    tol = {}
    for key, text in values.items():
        key = key.replace("-", "_")
        try:
            val = _parse_value(key, text)
        except KeyError:
            raise ParseError(f"{source}unknown key {key!r}") from None
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{source}bad value for {key!r}: {exc}") from None
        if key in _TOL_KEYS:
            tol[key] = val
        else:
            changes[key] = val
    if tol:
        changes["tolerances"] = replace(cfg.tolerances, **tol)
    return replace(cfg, **changes)


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = base or RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected 'key = value'", line=lineno)
        try:
            cfg = apply_overrides(cfg, {key.strip(): value})
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from None
        except ValidationError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return cfg


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    return {k[len(ENV_PREFIX):].lower(): v for k, v in environ.items() if k.startswith(ENV_PREFIX)}


def load_config(path=None, environ=None, cli: dict[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        with open(path) as fh:
            cfg = parse_config_text(fh.read(), cfg)
    cfg = apply_overrides(cfg, env_overrides(environ), "environment: ")
    if cli:
        cfg = apply_overrides(cfg, cli, "command line: ")
    return cfg.validate()
