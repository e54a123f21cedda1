"""Projective and dual flatness residuals, and the rigidity chain for u psi(r, s) metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jets
from .errors import ProfileDomainError, SpecializationError
from .expr import RadialFunction
from .profiles import R_MIN, EvaluationPoint, PsiProfile, check_positive, riemann_sqrt
from .spray import SprayScalars, psi_s_jets


@dataclass(frozen=True)
class FlatnessParams:
    k1: float


@dataclass(frozen=True)
class RigidityParams:
    """k(r), k2(r), the isotropy constant c and optional gamma(r) bookkeeping."""

    k_fn: RadialFunction | None = None
    k2_fn: RadialFunction | None = None
    c: float | None = None
    k1: float | None = None
    gamma_fn: RadialFunction | None = None

    def k(self, r: float) -> float:
        if self.k_fn is not None:
            return float(self.k_fn(r))
        return self.k_from_gamma(r)

    def k_from_gamma(self, r: float) -> float:
        """k(r) = k1 gamma(r) / (2c - k1); undefined when 2c = k1."""
        if self.gamma_fn is None or self.c is None or self.k1 is None:
            raise SpecializationError("k(r) needs either k_fn or (gamma_fn, c, k1)")
        gap = 2.0 * self.c - self.k1
        if abs(gap) <= 1e-12:
            raise SpecializationError("degenerate: 2c - k1 = 0, k(r) from gamma(r) undefined")
        return self.k1 * float(self.gamma_fn(r)) / gap


# ---------------------------------------------------------------------------------
# (x, y)-side residuals, all from F on XY-jets


@dataclass(frozen=True, eq=False)
class FirstOrderData:
    """F and its first x/y partials plus the mixed x-y block at one point."""

    F: float
    F_x: np.ndarray
    F_y: np.ndarray
    F_xy: np.ndarray  # [k, l] = d^2 F / dx^k dy^l


def first_order_data(metric, point: EvaluationPoint, square: bool = False) -> FirstOrderData:
    n = point.n
    sp = jets.xy_space(n, 1, 1)
    xs = jets.seed_all(point.x, sp)
    ys = jets.seed_all(point.y, sp, offset=n)
    F = metric(xs, ys)
    if square:
        F = F * F
    Fx = np.array([F.partial_unit(k) for k in range(n)])
    Fy = np.array([F.partial_unit(n + k) for k in range(n)])
    Fxy = np.array([[F.partial_unit(k, n + l) for l in range(n)] for k in range(n)])
    return FirstOrderData(F.value, Fx, Fy, Fxy)


def hamel_residual(metric, point: EvaluationPoint) -> np.ndarray:
    """F_{x^k y^l} y^k - F_{x^l}; zero iff projectively flat at the point."""
    d = first_order_data(metric, point)
    return d.F_xy.T @ point.y - d.F_x


def dual_flat_residual(metric, point: EvaluationPoint) -> np.ndarray:
    """L_{x^k y^l} y^k - 2 L_{x^l} with L = F^2."""
    d = first_order_data(metric, point, square=True)
    return d.F_xy.T @ point.y - 2.0 * d.F_x


def pfdf_components(metric, point: EvaluationPoint) -> tuple[np.ndarray, np.ndarray]:
    """(F_x, F F_y); F is PF and DF iff F_x = k1 F F_y with k1 constant."""
    d = first_order_data(metric, point)
    return d.F_x, d.F * d.F_y


def pfdf_residual(metric, point: EvaluationPoint, params: FlatnessParams) -> np.ndarray:
    Fx, FFy = pfdf_components(metric, point)
    return Fx - params.k1 * FFy


def _ls_ratio(pairs) -> float:
    num = math.fsum(a * b for a, b in pairs)
    den = math.fsum(b * b for _, b in pairs)
    return num / den if den > 0 else 0.0


def fit_k1(metric, points: Sequence[EvaluationPoint]) -> tuple[float, float]:
    """Least-squares k1 from F_x ~ k1 F F_y over all components; returns (k1, max residual)."""
    comps = [pfdf_components(metric, p) for p in points]
    pairs = [(a, b) for Fx, FFy in comps for a, b in zip(Fx.tolist(), FFy.tolist())]
    k1 = _ls_ratio(pairs)
    resid = max((abs(a - k1 * b) for a, b in pairs), default=0.0)
    return k1, resid


# ---------------------------------------------------------------------------------
# psi-side equations


def _psi_first(profile: PsiProfile, r: float, s: float):
    J = profile.jet(r, s)
    return J.value, J.partial([1, 0]), J.partial([0, 1]), J


def pfdf_psi_residuals(profile: PsiProfile, r: float, s: float, params: FlatnessParams) -> tuple[float, float]:
    """(psi_r / r - k1 psi psi_s, psi_s - k1 (psi^2 - s psi psi_s))."""
    psi, psi_r, psi_s, _ = _psi_first(profile, r, s)
    k1 = params.k1
    return (psi_r / r - k1 * psi * psi_s, psi_s - k1 * (psi * psi - s * psi * psi_s))


def fit_k1_psi(profile: PsiProfile, grid: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares k1 for both psi equations jointly; returns (k1, max residual)."""
    pairs = []
    for r, s in grid:
        psi, psi_r, psi_s, _ = _psi_first(profile, r, s)
        pairs.append((psi_r / r, psi * psi_s))
        pairs.append((psi_s, psi * psi - s * psi * psi_s))
    k1 = _ls_ratio(pairs)
    return k1, max(abs(a - k1 * b) for a, b in pairs)


def corollary_pq_residuals(scalars: SprayScalars, psi: float, params: FlatnessParams) -> tuple[float, float]:
    """(P - k1 psi / 2, Q)."""
    return scalars.P - 0.5 * params.k1 * psi, scalars.Q


def isotropy_consistency_residual(scalars: SprayScalars, psi_jet: jets.Jet, c: float,
                                  tol: float = 1e-9) -> float:
    """P - s P_s - c (psi - s psi_s), valid only where Q vanishes."""
    if abs(scalars.Q) > tol:
        raise SpecializationError(f"specialization inapplicable: |Q| = {abs(scalars.Q):.3g} > {tol:g}")
    if psi_jet.space.nvars == 2:
        psi, psi_s = psi_jet.value, psi_jet.partial([0, 1])
    else:
        psi, psi_s = psi_jet.value, psi_jet.partial([1])
    s = scalars.s
    return scalars.P - s * scalars.P_s - c * (psi - s * psi_s)


def _rs_partials(profile: PsiProfile, r: float, s: float):
    J = profile.jet(r, s)
    return (J.value, J.partial([1, 0]), J.partial([0, 1]), J.partial([0, 2]), J.partial([1, 1]))


def rigidity_chain_residuals(profile: PsiProfile, r: float, s: float,
                             params: RigidityParams) -> tuple[float, float, float]:
    """(Hash, 2Star, 2Hash):

    2 r s k psi - s psi_r - r psi_s,
    r psi_ss + s psi_rs - psi_r,
    r k psi + r s k psi_s - psi_r.
    """
    psi, psi_r, psi_s, psi_ss, psi_rs = _rs_partials(profile, r, s)
    k = params.k(r)
    hash_ = 2 * r * s * k * psi - s * psi_r - r * psi_s
    star2 = r * psi_ss + s * psi_rs - psi_r
    hash2 = r * k * psi + r * s * k * psi_s - psi_r
    return hash_, star2, hash2


def star_residual(profile: PsiProfile, r: float, s: float, params: RigidityParams) -> float:
    """2 r k psi + 2 r s k psi_s - r psi_ss - s psi_rs - psi_r."""
    psi, psi_r, psi_s, psi_ss, psi_rs = _rs_partials(profile, r, s)
    k = params.k(r)
    return 2 * r * k * psi + 2 * r * s * k * psi_s - r * psi_ss - s * psi_rs - psi_r


def hash_residual_jet(profile: PsiProfile, r: float, s: float, params: RigidityParams) -> jets.Jet:
    """The Hash residual as an s-jet at fixed r, for checking Star = d(Hash)/ds."""
    psi, psi_r, psi_s, _, _ = psi_s_jets(profile, r, s)
    t = jets.seed_variable(0, s, psi.space)
    k = params.k(r)
    return 2 * r * k * t * psi - t * psi_r - r * psi_s


def fit_k_hash(profile: PsiProfile, r: float, s_grid: Sequence[float]) -> tuple[float, float]:
    """Least-squares k(r) from Hash on an s-grid at fixed r; returns (k, max residual)."""
    pairs = []
    for s in s_grid:
        psi, psi_r, psi_s, _, _ = _rs_partials(profile, r, float(s))
        pairs.append((s * psi_r + r * psi_s, 2 * r * s * psi))
    k = _ls_ratio(pairs)
    return k, max(abs(a - k * b) for a, b in pairs)


def rigidity_family(params: RigidityParams, r_range: tuple[float, float] = (R_MIN, 0.99)) -> PsiProfile:
    """psi = k2(r) sqrt(1 + k(r) s^2); checks positivity on the admissible region."""
    if params.k_fn is None or params.k2_fn is None:
        raise SpecializationError("rigidity_family needs both k_fn and k2_fn")
    merged = {**params.k_fn.params, **params.k2_fn.params}
    prof = riemann_sqrt(params.k2_fn.text, params.k_fn.text, merged)
    try:
        check_positive(prof, r_range)
    except ProfileDomainError as exc:
        raise ProfileDomainError(f"family domain error: {exc}") from exc
    return prof


@dataclass(frozen=True)
class RiemannianCheck:
    verdict: bool
    max_third: float  # largest |d^3 (F^2) / dy^3| over samples, relative to max(1, psi^2)
    worst_index: int

    def __bool__(self):
        return self.verdict


def third_y_derivatives(metric, point: EvaluationPoint) -> np.ndarray:
    n = point.n
    sp = jets.y_space(n, 3)
    ys = jets.seed_all(point.y, sp)
    F = metric([float(v) for v in point.x], ys)
    L = F * F
    scale = max(1.0, L.value / point.u ** 2)
    out = [L.partial_unit(i, j, k) for i in range(n) for j in range(i, n) for k in range(j, n)]
    return np.array(out) / scale


def is_riemannian(metric, samples: Sequence[EvaluationPoint], tol: float = 1e-10) -> RiemannianCheck:
    """True iff F^2 is quadratic in y at every sample (all third y-partials vanish)."""
    mags = [float(np.max(np.abs(third_y_derivatives(metric, p)))) for p in samples]
    idx = int(np.argmax(mags))
    return RiemannianCheck(mags[idx] <= tol, mags[idx], idx)


def default_grid(r_values: Sequence[float] = (0.1, 0.3, 0.5, 0.7), n_s: int = 17) -> list[tuple[float, float]]:
    """Chebyshev-spaced s in [-0.9 r, 0.9 r] for each r."""
    nodes = np.cos((2 * np.arange(n_s) + 1) * np.pi / (2 * n_s))[::-1]
    return [(float(r), float(0.9 * r * t)) for r in r_values for t in nodes]

