"""Geodesic spray of F = u psi(r, s): closed form via (P, Q) and the general oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import ConvexityError, ProfileDomainError, SingularTensorError, ZeroVectorError
from .profiles import EvaluationPoint, PsiProfile

# Degree of the s-jets carrying P and Q: psi_ss loses two of the six tracked s-orders.
PQ_DEGREE = 4

Metric = Callable[[Sequence, Sequence], object]


@dataclass(frozen=True)
class SprayScalars:
    """P, Q and their s-derivatives at (r, s), plus the psi data they came from."""

    r: float
    s: float
    P: float
    P_s: float
    P_ss: float
    Q: float
    Q_s: float
    Q_ss: float
    Q_sss: float
    psi: float
    psi_s: float
    psi_ss: float
    denominator: float


@dataclass(frozen=True)
class ProfileSJets:
    """psi, psi_r and derived quantities as jets in s at fixed r (degree ``PQ_DEGREE``)."""

    r: float
    s: float
    psi: jets.Jet
    psi_r: jets.Jet
    psi_s: jets.Jet
    psi_ss: jets.Jet
    psi_rs: jets.Jet
    P: jets.Jet
    Q: jets.Jet
    denominator: jets.Jet


def psi_s_jets(profile: PsiProfile, r: float, s: float) -> tuple[jets.Jet, ...]:
    """(psi, psi_r, psi_s, psi_ss, psi_rs) as s-jets of degree ``PQ_DEGREE`` at fixed r."""
    rs = profile.jet(r, s)
    full = jets.s_space(rs.space.cap_of(1))
    low = jets.s_space(PQ_DEGREE)

    psi_f = rs.section(full, keep=(1,))
    psi_r_f = rs.section(full, keep=(1,), orders={0: 1})
    psi_s_f = psi_f.diff(0)

    def cut(j):
        return j.section(low, keep=(0,))

    return cut(psi_f), cut(psi_r_f), cut(psi_s_f), cut(psi_s_f.diff(0)), cut(psi_r_f.diff(0))


def profile_s_jets(profile: PsiProfile, r: float, s: float) -> ProfileSJets:
    """Evaluate the P and Q formulas on s-jets, so every s-derivative is a jet coefficient."""
    psi, psi_r, psi_s, psi_ss, psi_rs = psi_s_jets(profile, r, s)
    low = psi.space
    if not psi.value > 0:
        raise ProfileDomainError(f"profile not positive: psi({r!r}, {s!r}) = {psi.value!r}")
    sj = jets.seed_variable(0, s, low)
    r2_s2 = r * r - sj * sj
    denom = psi - sj * psi_s + r2_s2 * psi_ss
    if not denom.value > 0:
        raise ConvexityError(f"metric not strongly convex here: psi - s psi_s + (r^2 - s^2) psi_ss = {denom.value!r}")

    Q = (r * psi_ss + sj * psi_rs - psi_r) / (2.0 * r * denom)
    P = (sj * psi_r + r * psi_s) / (2.0 * r * psi) - (sj * psi + r2_s2 * psi_s) / psi * Q
    return ProfileSJets(r, s, psi, psi_r, psi_s, psi_ss, psi_rs, P, Q, denom)


def compute_PQ(profile: PsiProfile, r: float, s: float) -> SprayScalars:
    j = profile_s_jets(profile, r, s)
    P, Q = j.P, j.Q
    return SprayScalars(
        r=r, s=s,
        P=P.value, P_s=P.partial([1]), P_ss=P.partial([2]),
        Q=Q.value, Q_s=Q.partial([1]), Q_ss=Q.partial([2]), Q_sss=Q.partial([3]),
        psi=j.psi.value, psi_s=j.psi.partial([1]), psi_ss=j.psi.partial([2]),
        denominator=j.denominator.value,
    )


def _require_nonzero(point: EvaluationPoint, message: str):
    if not point.u > 0:
        raise ZeroVectorError(message)


def assemble_spray(point: EvaluationPoint, scalars: SprayScalars) -> np.ndarray:
    """G^i = u P y^i + u^2 Q x^i."""
    _require_nonzero(point, "evaluation at zero vector")
    u = point.u
    return u * scalars.P * point.y + u * u * scalars.Q * point.x


def closed_form_spray(profile: PsiProfile, point: EvaluationPoint) -> np.ndarray:
    return assemble_spray(point, compute_PQ(profile, point.r, point.s))


# ---------------------------------------------------------------------------------
# y-jets of the spray


def _y_seeds(values, space):
    if space.max_order == 0:
        return [jets.Jet.constant(float(v), space) for v in values]
    return jets.seed_all(values, space)


def solve_jets(A: list[list[jets.Jet]], b: list[jets.Jet]) -> list[jets.Jet]:
    """Gaussian elimination with partial pivoting on constant terms."""
    n = len(b)
    A = [row[:] for row in A]
    b = b[:]
    scale = max(abs(a.value) for row in A for a in row) or 1.0
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(A[i][k].value))
        if abs(A[p][k].value) <= 1e-14 * scale:
            raise SingularTensorError("fundamental tensor singular")
        if p != k:
            A[k], A[p] = A[p], A[k]
            b[k], b[p] = b[p], b[k]
        inv = jets.reciprocal(A[k][k])
        for i in range(k + 1, n):
            f = A[i][k] * inv
            if f.is_constant() and f.value == 0.0:
                continue
            for j in range(k + 1, n):
                A[i][j] = A[i][j] - f * A[k][j]
            b[i] = b[i] - f * b[k]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc = acc - A[i][j] * x[j]
        x[i] = acc / A[i][i]
    return x


def general_spray_jets(metric: Metric, point: EvaluationPoint, degree: int = 0) -> list[jets.Jet]:
    """G^i = g^{il} ((F^2)_{x^k y^l} y^k - (F^2)_{x^l}) / 4 as y-jets of ``degree``.

    F^2 is built on XY-jets with x-degree 1 and y-degree ``degree + 2``.
    """
    _require_nonzero(point, "evaluation at zero vector")
    n = point.n
    sp = jets.xy_space(n, 1, degree + 2)
    xs = jets.seed_all(point.x, sp)
    ys = jets.seed_all(point.y, sp, offset=n)
    F = metric(xs, ys)
    L = F * F
    keep = tuple(range(n, 2 * n))
    wide = jets.y_space(n, degree + 2)
    out = jets.y_space(n, degree)

    L0 = L.section(wide, keep)
    Lx = [L.section(wide, keep, orders={k: 1}) for k in range(n)]
    L0_i = [L0.diff(i) for i in range(n)]
    g = [[(0.5 * L0_i[i].diff(l)).section(out, tuple(range(n))) for l in range(n)] for i in range(n)]
    for i in range(n):
        for l in range(i):
            g[i][l] = g[l][i]
    y = _y_seeds(point.y, out)
    rhs = []
    for l in range(n):
        acc = -Lx[l].section(out, tuple(range(n)))
        for k in range(n):
            acc = acc + Lx[k].diff(l).section(out, tuple(range(n))) * y[k]
        rhs.append(acc)
    G = solve_jets(g, rhs)
    return [0.25 * gi for gi in G]


def general_spray_oracle(metric: Metric, point: EvaluationPoint) -> np.ndarray:
    return np.array([g.value for g in general_spray_jets(metric, point, 0)])


def closed_spray_jets(profile: PsiProfile, point: EvaluationPoint, degree: int) -> list[jets.Jet]:
    """G^i = u P(s) y^i + u^2 Q(s) x^i with y seeded as jets; P, Q from their s-jets."""
    _require_nonzero(point, "evaluation at zero vector")
    if degree > PQ_DEGREE:
        raise ValueError(f"closed-form spray tracks at most {PQ_DEGREE} y-orders")
    n = point.n
    sp = jets.y_space(n, degree)
    y = _y_seeds(point.y, sp)
    x = [float(v) for v in point.x]
    sj = profile_s_jets(profile, point.r, point.s)
    uu = sum(yi * yi for yi in y)
    u = jets.sqrt(uu) if isinstance(uu, jets.Jet) else float(np.sqrt(uu))
    s = sum(xi * yi for xi, yi in zip(x, y)) / u
    P = jets.compose(sj.P.coeffs, s)
    Q = jets.compose(sj.Q.coeffs, s)
    uP, uuQ = u * P, uu * Q
    return [uP * y[i] + uuQ * x[i] for i in range(n)]


class ClosedFormSpray:
    """Spray provider built from the (P, Q) formulas of a profile."""

    kind = "closed_form"

    def __init__(self, profile: PsiProfile):
        self.profile = profile

    def jets(self, point, degree):
        return closed_spray_jets(self.profile, point, degree)

    def __call__(self, point):
        return closed_form_spray(self.profile, point)


class GeneralSpray:
    """Spray provider built from the definition applied to an arbitrary metric F."""

    kind = "general"

    def __init__(self, metric: Metric):
        self.metric = metric

    def jets(self, point, degree):
        return general_spray_jets(self.metric, point, degree)

    def __call__(self, point):
        return general_spray_oracle(self.metric, point)


# ---------------------------------------------------------------------------------
# fundamental tensor


@dataclass(frozen=True, eq=False)
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    positive_definite: bool
    minors: tuple[float, ...]
    condition: float


@dataclass(frozen=True)
class ConvexityCheck:
    positive_definite: bool
    min_pivot: float  # smallest ratio of consecutive leading minors

    def __bool__(self):
        return self.positive_definite


def fundamental_tensor(metric: Metric, point: EvaluationPoint) -> FundamentalTensor:
    """g_ij = (F^2)_{y^i y^j} / 2 by jets; inverse by LU solve even if not definite."""
    _require_nonzero(point, "norm not smooth at origin")
    n = point.n
    sp = jets.y_space(n, 2)
    ys = jets.seed_all(point.y, sp)
    F = metric([float(v) for v in point.x], ys)
    L = F * F
    g = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g[i, j] = 0.5 * L.partial_unit(i, j)
    g = 0.5 * (g + g.T)
    minors = tuple(float(np.linalg.det(g[:k, :k])) for k in range(1, n + 1))
    pd = all(m > 0 for m in minors)
    try:
        g_inv = np.linalg.solve(g, np.eye(n))
        cond = float(np.linalg.cond(g))
    except np.linalg.LinAlgError:
        g_inv = np.full((n, n), np.nan)
        cond = float("inf")
    return FundamentalTensor(g, g_inv, pd, minors, cond)


def convexity_check(metric: Metric, point: EvaluationPoint) -> ConvexityCheck:
    ft = fundamental_tensor(metric, point)
    prev, pivots = 1.0, []
    for m in ft.minors:
        pivots.append(m / prev if prev != 0 else -np.inf)
        prev = m
    return ConvexityCheck(ft.positive_definite, float(min(pivots)))


# ---------------------------------------------------------------------------------
# finite differences (secondary cross-check only)


def fd_spray(metric: Metric, point: EvaluationPoint, h: float = 1e-5) -> np.ndarray:
    """Central-difference version of the spray definition on the float metric."""
    n = point.n
    x0, y0 = np.array(point.x), np.array(point.y)

    def L(x, y):
        f = metric(list(x), list(y))
        return float(f) ** 2

    E = np.eye(n) * h
    Lx = np.array([(L(x0 + E[l], y0) - L(x0 - E[l], y0)) / (2 * h) for l in range(n)])
    Lxy = np.empty((n, n))
    g = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            Lxy[k, l] = (L(x0 + E[k], y0 + E[l]) - L(x0 + E[k], y0 - E[l])
                         - L(x0 - E[k], y0 + E[l]) + L(x0 - E[k], y0 - E[l])) / (4 * h * h)
    L00 = L(x0, y0)
    for i in range(n):
        for j in range(i, n):
            if i == j:
                d2 = (L(x0, y0 + E[i]) - 2 * L00 + L(x0, y0 - E[i])) / (h * h)
            else:
                d2 = (L(x0, y0 + E[i] + E[j]) - L(x0, y0 + E[i] - E[j])
                      - L(x0, y0 - E[i] + E[j]) + L(x0, y0 - E[i] - E[j])) / (4 * h * h)
            g[i, j] = g[j, i] = 0.5 * d2
    rhs = Lxy.T @ y0 - Lx
    return 0.25 * np.linalg.solve(g, rhs)
