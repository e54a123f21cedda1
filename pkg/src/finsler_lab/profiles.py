"""Profile functions psi(r, s) defining F(x, y) = |y| psi(|x|, <x,y>/|y|)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import expr, jets
from .errors import JetError, ProfileDomainError

R_MIN = 1e-3


@dataclass(frozen=True, eq=False)
class EvaluationPoint:
    """A base point x with a nonzero tangent vector y."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"x and y differ in dimension: {x.shape} vs {y.shape}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def u(self) -> float:
        return float(np.linalg.norm(self.y))

    @property
    def v(self) -> float:
        return float(self.x @ self.y)

    @property
    def s(self) -> float:
        return self.v / self.u

    def scaled(self, lam: float) -> "EvaluationPoint":
        return EvaluationPoint(self.x, lam * self.y)

    def rotated(self, O: np.ndarray) -> "EvaluationPoint":
        return EvaluationPoint(O @ self.x, O @ self.y)

    def as_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist()}


@dataclass(frozen=True)
class Domain:
    """Admissible (r, s) region: r_min <= r (< r_max when set), |s| <= r."""

    r_max: float | None = None

    def admits(self, r: float, s: float) -> bool:
        if not r > 0.0:
            return False
        if self.r_max is not None and not r < self.r_max:
            return False
        return abs(s) <= r * (1.0 + 1e-12)

    def describe(self) -> str:
        return "0 < r, |s| <= r" + (f", r < {self.r_max:g}" if self.r_max is not None else "")


@dataclass(frozen=True, eq=False)
class PsiProfile:
    name: str
    formula: str
    body: expr.Node
    params: Mapping[str, float] = field(default_factory=dict)
    domain: Domain = Domain()

    def __call__(self, r: float, s: float) -> float:
        self._check(r, s)
        return float(expr.evaluate(self.body, {"r": float(r), "s": float(s)}))

    def _check(self, r, s):
        if not self.domain.admits(r, s):
            raise ProfileDomainError(
                f"profile domain error: {self.name} at (r, s) = ({r!r}, {s!r}) outside {self.domain.describe()}"
            )

    def jet(self, r: float, s: float) -> jets.Jet:
        """RS-jet of psi at (r, s): r-degree <= 2, s-degree <= 6."""
        self._check(r, s)
        sp = jets.rs_space()
        env = {"r": jets.seed_variable(0, r, sp), "s": jets.seed_variable(1, s, sp)}
        out = expr.evaluate(self.body, env)
        if not isinstance(out, jets.Jet):
            out = jets.Jet.constant(float(out), sp)
        return out

    def metric(self) -> "ProfileMetric":
        return ProfileMetric(self)

    def F(self, x: Sequence[float], y: Sequence[float]) -> float:
        p = EvaluationPoint(x, y)
        return p.u * self(p.r, p.s)


def eval_profile(profile: PsiProfile, r: float, s: float) -> jets.Jet:
    return profile.jet(r, s)


class ProfileMetric:
    """F = u psi(r, s) as a callable on coordinate lists (floats or XY-jets).

    Evaluates the profile expression directly on r = |x|, s = <x,y>/|y|,
    without any closed-form spray knowledge.
    """

    def __init__(self, profile: PsiProfile):
        self.profile = profile

    def __call__(self, xs, ys):
        r = jets.sqrt(sum(xi * xi for xi in xs))
        u = jets.sqrt(sum(yi * yi for yi in ys))
        s = sum(xi * yi for xi, yi in zip(xs, ys)) / u
        return u * expr.evaluate(self.profile.body, {"r": r, "s": s})

    def __repr__(self):
        return f"ProfileMetric({self.profile.name})"


def parse_psi(text: str, params: Mapping[str, float] | None = None, name: str | None = None,
              r_max: float | None = None) -> PsiProfile:
    """Build a profile from an expression in r, s and the given parameters."""
    params = dict(params or {})
    body = expr.parse(text, params)
    return PsiProfile(name or text, text, body, params, Domain(r_max))


def euclidean() -> PsiProfile:
    return parse_psi("1", name="euclidean")


def sqrt_one_plus_s2() -> PsiProfile:
    return parse_psi("sqrt(1 + s^2)", name="sqrt_one_plus_s2")


def klein() -> PsiProfile:
    return parse_psi("sqrt(1 - r^2 + s^2)/(1 - r^2)", name="klein", r_max=1.0)


def funk() -> PsiProfile:
    return parse_psi("(sqrt(1 - r^2 + s^2) + s)/(1 - r^2)", name="funk", r_max=1.0)


def riemann_sqrt(k2_expr: str, k_expr: str, params: Mapping[str, float] | None = None,
                 r_max: float | None = None) -> PsiProfile:
    """psi = k2(r) sqrt(1 + k(r) s^2) for radial expressions k2, k."""
    params = dict(params or {})
    k2 = expr.parse(k2_expr, params, variables=("r",))
    k = expr.parse(k_expr, params, variables=("r",))
    s2 = expr.Pow(expr.Var("s"), 2)
    body = expr.BinOp("*", k2, expr.Call("sqrt", expr.BinOp("+", expr.Const(1.0), expr.BinOp("*", k, s2))))
    formula = f"({k2_expr})*sqrt(1 + ({k_expr})*s^2)"
    return PsiProfile("riemann_sqrt", formula, body, params, Domain(r_max))


CATALOG = {
    "euclidean": ("1", euclidean),
    "sqrt_one_plus_s2": ("sqrt(1 + s^2)", sqrt_one_plus_s2),
    "klein": ("sqrt(1 - r^2 + s^2)/(1 - r^2), r < 1", klein),
    "funk": ("(sqrt(1 - r^2 + s^2) + s)/(1 - r^2), r < 1", funk),
    "riemann_sqrt": ("k2(r)*sqrt(1 + k(r)*s^2); needs k2_expr, k_expr", riemann_sqrt),
}


def get_profile(name: str, **kwargs) -> PsiProfile:
    try:
        factory = CATALOG[name][1]
    except KeyError:
        raise KeyError(f"unknown metric {name!r}; built-ins: {sorted(CATALOG)}") from None
    return factory(**kwargs)


def check_positive(profile: PsiProfile, r_range: tuple[float, float], n_r: int = 9, n_s: int = 9) -> float:
    """Sample psi on the admissible grid over ``r_range``; returns the minimum.

    Raises ProfileDomainError when psi <= 0 (or is undefined) anywhere on the grid.
    """
    lo, hi = r_range
    if profile.domain.r_max is not None:
        hi = min(hi, profile.domain.r_max * (1.0 - 1e-9))
    lowest = math.inf
    for r in np.linspace(lo, hi, n_r):
        for t in np.linspace(-1.0, 1.0, n_s):
            s = float(t * r)
            try:
                val = profile(float(r), s)
            except (ProfileDomainError, ArithmeticError, JetError) as exc:
                raise ProfileDomainError(f"profile domain error: {profile.name} undefined at r={r:g}, s={s:g}") from exc
            if not val > 0:
                raise ProfileDomainError(f"profile not positive: psi({r:g}, {s:g}) = {val:g}")
            lowest = min(lowest, val)
    return lowest


def strong_convexity_check(profile: PsiProfile, point: EvaluationPoint):
    """Leading-principal-minor test of g_ij = (F^2)_{y^i y^j}/2 at ``point``.

    Returns a :class:`~finsler_lab.spray.ConvexityCheck` (truthy when positive definite).
    """
    from .spray import convexity_check

    return convexity_check(profile.metric(), point)
