"""Run configuration: a JSON document validated into :class:`RunConfig`.

Schema (all keys optional except ``metric``)::

    {
      "metric": "funk"                               # built-in name, or
              | {"name": "riemann_sqrt", "k2": "<expr in r>", "k": "<expr in r>",
                 "params": {...}}                    # parametrised built-in, or
              | {"psi": "<expr in r, s>", "params": {...}, "r_max": 1.0},
      "n": 3,                       # 2 <= n <= 5
      "samples": 50,
      "seed": 0,
      "r_range": [0.001, 0.9],      # r_min >= 1e-3
      "tolerance_zero": 1e-9,
      "threshold_nonzero": 1e-3,
      "k1": "scan" | <number>,
      "c": "scan" | <number>,
      "k_fn": null | "<expr in r>",
      "k2_fn": null | "<expr in r>",
      "suites": ["classify", "validate", "rigidity"],
      "include_timing": false
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .. import expr
from ..errors import ConfigError, ParseError
from ..profiles import CATALOG, R_MIN, PsiProfile, get_profile, parse_psi

SUITES = ("classify", "validate", "rigidity")
_KEYS = {"metric", "n", "samples", "seed", "r_range", "tolerance_zero", "threshold_nonzero",
         "k1", "c", "k_fn", "k2_fn", "suites", "include_timing"}


@dataclass(frozen=True)
class MetricSpec:
    name: str | None = None
    psi: str | None = None
    params: dict = field(default_factory=dict)
    k2: str | None = None
    k: str | None = None
    r_max: float | None = None

    def build(self) -> PsiProfile:
        try:
            if self.psi is not None:
                return parse_psi(self.psi, self.params, r_max=self.r_max)
            if self.name == "riemann_sqrt":
                if self.k2 is None or self.k is None:
                    raise ConfigError("malformed_expression", "riemann_sqrt needs both 'k2' and 'k'")
                return get_profile("riemann_sqrt", k2_expr=self.k2, k_expr=self.k, params=self.params,
                                   r_max=self.r_max)
            return get_profile(self.name)
        except ParseError as exc:
            raise ConfigError("malformed_expression", str(exc)) from exc

    def to_dict(self):
        if self.psi is not None:
            d = {"psi": self.psi, "params": dict(self.params)}
            if self.r_max is not None:
                d["r_max"] = self.r_max
            return d
        if self.name == "riemann_sqrt":
            d = {"name": self.name, "k2": self.k2, "k": self.k, "params": dict(self.params)}
            if self.r_max is not None:
                d["r_max"] = self.r_max
            return d
        return self.name


@dataclass(frozen=True)
class RunConfig:
    metric: MetricSpec
    n: int = 3
    samples: int = 50
    seed: int = 0
    r_range: tuple[float, float] = (R_MIN, 0.9)
    tolerance_zero: float = 1e-9
    threshold_nonzero: float = 1e-3
    k1: float | str = "scan"
    c: float | str = "scan"
    k_fn: str | None = None
    k2_fn: str | None = None
    suites: tuple[str, ...] = ("classify",)
    include_timing: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric.to_dict(),
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "r_range": list(self.r_range),
            "tolerance_zero": self.tolerance_zero,
            "threshold_nonzero": self.threshold_nonzero,
            "k1": self.k1,
            "c": self.c,
            "k_fn": self.k_fn,
            "k2_fn": self.k2_fn,
            "suites": list(self.suites),
            "include_timing": self.include_timing,
        }

    def radial(self, text: str) -> expr.RadialFunction:
        """A radial expression sharing the metric's parameters."""
        return expr.RadialFunction(text, self.metric.params)

    def profile(self) -> PsiProfile:
        return self.metric.build()

    def effective_r_range(self, profile: PsiProfile | None = None) -> tuple[float, float]:
        """``r_range`` intersected with the profile's own domain."""
        profile = profile or self.profile()
        lo, hi = self.r_range
        if profile.domain.r_max is not None:
            hi = min(hi, profile.domain.r_max * (1.0 - 1e-6))
        if not lo < hi:
            raise ConfigError("invalid_r_range",
                              f"r_range {list(self.r_range)} does not meet the domain {profile.domain.describe()}")
        return lo, hi


def _metric_spec(raw) -> MetricSpec:
    if isinstance(raw, str):
        if raw not in CATALOG:
            raise ConfigError("unknown_metric", f"unknown metric {raw!r}; built-ins: {sorted(CATALOG)}")
        if raw == "riemann_sqrt":
            raise ConfigError("malformed_expression", "riemann_sqrt needs an object with 'k2' and 'k'")
        return MetricSpec(name=raw)
    if not isinstance(raw, dict):
        raise ConfigError("invalid_value", "metric must be a name or an object")
    extra = set(raw) - {"name", "psi", "params", "k2", "k", "r_max"}
    if extra:
        raise ConfigError("unknown_key", f"unknown metric keys {sorted(extra)}")
    params = raw.get("params") or {}
    if not isinstance(params, dict) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                               for v in params.values()):
        raise ConfigError("invalid_value", "metric params must map names to numbers")
    params = {str(k): float(v) for k, v in params.items()}
    r_max = raw.get("r_max")
    if r_max is not None:
        r_max = _number(r_max, "metric.r_max")
    if "psi" in raw:
        if not isinstance(raw["psi"], str):
            raise ConfigError("malformed_expression", "psi must be an expression string")
        return MetricSpec(psi=raw["psi"], params=params, r_max=r_max)
    name = raw.get("name")
    if name not in CATALOG:
        raise ConfigError("unknown_metric", f"unknown metric {name!r}; built-ins: {sorted(CATALOG)}")
    return MetricSpec(name=name, params=params, k2=raw.get("k2"), k=raw.get("k"), r_max=r_max)


def _number(v, key) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError("invalid_value", f"{key} must be a finite number, got {v!r}")
    return float(v)


def _integer(v, key) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("invalid_value", f"{key} must be an integer, got {v!r}")
    return v


def _scan_or_number(v, key):
    if v == "scan":
        return "scan"
    return _number(v, key)


def _radial(text, key, params):
    if text is None:
        return None
    if not isinstance(text, str):
        raise ConfigError("malformed_expression", f"{key} must be an expression string")
    try:
        expr.parse(text, params, variables=("r",))
    except ParseError as exc:
        raise ConfigError("malformed_expression", f"{key}: {exc}") from exc
    return text


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("malformed_document", "config must be a JSON object")
    extra = set(d) - _KEYS
    if extra:
        raise ConfigError("unknown_key", f"unknown config keys {sorted(extra)}")
    if "metric" not in d:
        raise ConfigError("invalid_value", "config needs a 'metric'")
    spec = _metric_spec(d["metric"])
    kw: dict[str, Any] = {"metric": spec}
    if "n" in d:
        kw["n"] = _integer(d["n"], "n")
        if not 2 <= kw["n"] <= 5:
            raise ConfigError("invalid_value", f"n must lie in 2..5, got {kw['n']}")
    if "samples" in d:
        kw["samples"] = _integer(d["samples"], "samples")
        if kw["samples"] < 1:
            raise ConfigError("invalid_value", "samples must be positive")
    if "seed" in d:
        kw["seed"] = _integer(d["seed"], "seed")
        if kw["seed"] < 0:
            raise ConfigError("invalid_value", "seed must be unsigned")
    if "r_range" in d:
        rr = d["r_range"]
        if not isinstance(rr, (list, tuple)) or len(rr) != 2:
            raise ConfigError("invalid_r_range", "r_range must be [r_min, r_max]")
        lo, hi = (_number(v, "r_range") for v in rr)
        if lo <= 0:
            raise ConfigError("invalid_r_range", f"r_min must be positive, got {lo}")
        if lo < R_MIN:
            raise ConfigError("invalid_r_range", f"r_min must be >= {R_MIN}, got {lo}")
        if not lo < hi:
            raise ConfigError("invalid_r_range", f"need r_min < r_max, got {[lo, hi]}")
        kw["r_range"] = (lo, hi)
    for key in ("tolerance_zero", "threshold_nonzero"):
        if key in d:
            kw[key] = _number(d[key], key)
            if kw[key] <= 0:
                raise ConfigError("invalid_value", f"{key} must be positive")
    tz = kw.get("tolerance_zero", RunConfig.tolerance_zero)
    tn = kw.get("threshold_nonzero", RunConfig.threshold_nonzero)
    if not tz < tn:
        raise ConfigError("tolerance_order", f"need tolerance_zero < threshold_nonzero, got {tz} >= {tn}")
    for key in ("k1", "c"):
        if key in d:
            kw[key] = _scan_or_number(d[key], key)
    for key in ("k_fn", "k2_fn"):
        if key in d:
            kw[key] = _radial(d[key], key, spec.params)
    if "suites" in d:
        suites = d["suites"]
        if isinstance(suites, str):
            suites = [suites]
        if not suites or any(s not in SUITES for s in suites):
            raise ConfigError("invalid_value", f"suites must be a non-empty subset of {list(SUITES)}")
        kw["suites"] = tuple(s for s in SUITES if s in suites)
    if "include_timing" in d:
        kw["include_timing"] = bool(d["include_timing"])
    cfg = RunConfig(**kw)
    cfg.effective_r_range(cfg.profile())  # surfaces parse and domain errors now
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("malformed_document", f"invalid JSON: {exc}") from exc
    return config_from_dict(doc)
