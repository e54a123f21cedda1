"""S-curvature, mean Berwald (E) curvature, Berwald tensor and isotropy tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jets
from .errors import SpecializationError
from .profiles import EvaluationPoint, PsiProfile
from .spray import SprayScalars, compute_PQ, profile_s_jets


def s_curvature(point: EvaluationPoint, scalars: SprayScalars) -> float:
    """S = u((n+1)P + 2sQ + (r^2 - s^2)Q_s), i.e. dG^k/dy^k for the Euclidean volume."""
    n, u, r, s = point.n, point.u, scalars.r, scalars.s
    return u * ((n + 1) * scalars.P + 2 * s * scalars.Q + (r * r - s * s) * scalars.Q_s)


def e_closed_from_scalars(point: EvaluationPoint, sc: SprayScalars) -> np.ndarray:
    n, u = point.n, point.u
    r, s = sc.r, sc.s
    w = r * r - s * s
    m = n + 1
    xx = m * sc.P_ss + 2 * sc.Q_s + w * sc.Q_sss - 2 * s * sc.Q_ss
    xy = -m * s * sc.P_ss - 2 * s * sc.Q_s - s * w * sc.Q_sss + 2 * s * s * sc.Q_ss
    yy = (m * s * s * sc.P_ss + 2 * s * s * sc.Q_s + s * s * w * sc.Q_sss - 2 * s ** 3 * sc.Q_ss
          + m * s * sc.P_s - m * sc.P + s * w * sc.Q_ss - w * sc.Q_s)
    dd = -m * s * sc.P_s + m * sc.P - s * w * sc.Q_ss + w * sc.Q_s
    x, y = point.x, point.y
    E = (xx / u * np.outer(x, x)
         + xy / u ** 2 * (np.outer(x, y) + np.outer(y, x))
         + yy / u ** 3 * np.outer(y, y)
         + dd / u * np.eye(n))
    return 0.5 * E


def e_closed(point: EvaluationPoint, profile: PsiProfile) -> np.ndarray:
    """E_ij from the four-block closed form in P, Q and their s-derivatives."""
    return e_closed_from_scalars(point, compute_PQ(profile, point.r, point.s))


def _trace_jet(G: Sequence[jets.Jet]) -> jets.Jet:
    return jets.jet_sum(g.diff(k) for k, g in enumerate(G))


def e_from_spray_jets(G: Sequence[jets.Jet]) -> np.ndarray:
    T = _trace_jet(G)
    n = len(G)
    E = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            E[i, j] = 0.5 * T.partial_unit(i, j)
    return E


def berwald_from_spray_jets(G: Sequence[jets.Jet]) -> np.ndarray:
    n = len(G)
    B = np.empty((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                for l in range(k, n):
                    v = G[i].partial_unit(j, k, l)
                    for a, b, c in {(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)}:
                        B[i, a, b, c] = v
    return B


def e_oracle(point: EvaluationPoint, spray_provider) -> np.ndarray:
    """E_ij = (1/2) d^2/dy^i dy^j (sum_k dG^k/dy^k), entirely by jets."""
    return e_from_spray_jets(spray_provider.jets(point, 3))


def berwald_tensor(point: EvaluationPoint, spray_provider) -> np.ndarray:
    """B^i_jkl = d^3 G^i / dy^j dy^k dy^l as an (n, n, n, n) array."""
    return berwald_from_spray_jets(spray_provider.jets(point, 3))


def jet_trace(point: EvaluationPoint, spray_provider) -> float:
    return _trace_jet(spray_provider.jets(point, 1)).value


def berwald_conditions(scalars: SprayScalars, s: float | None = None) -> tuple[float, float, float, float]:
    """(s P_s - P, P_ss, s Q_ss - Q_s, Q_sss); all zero iff the metric is Berwald."""
    s = scalars.s if s is None else s
    return (s * scalars.P_s - scalars.P, scalars.P_ss, s * scalars.Q_ss - scalars.Q_s, scalars.Q_sss)


@dataclass(frozen=True)
class IsotropyEstimate:
    r: float
    c_mean: float
    c_deviation: float
    verdict: bool
    c_values: tuple[float, ...]


def isotropy_c(profile: PsiProfile, r: float, s: float, n: int) -> float:
    """c(r, s) = [(n+1)(P - sP_s) + (r^2-s^2)(Q_s - sQ_ss)] / [(n+1)(psi - s psi_s)]."""
    sc = compute_PQ(profile, r, s)
    den = (n + 1) * (sc.psi - s * sc.psi_s)
    if not den > 0:
        raise SpecializationError(f"degenerate isotropy denominator: (n+1)(psi - s psi_s) = {den!r}")
    num = (n + 1) * (sc.P - s * sc.P_s) + (r * r - s * s) * (sc.Q_s - s * sc.Q_ss)
    return num / den


def isotropic_e_residual(profile: PsiProfile, r: float, s_grid: Sequence[float], n: int,
                         tol: float = 1e-9) -> IsotropyEstimate:
    cs = [isotropy_c(profile, r, float(s), n) for s in s_grid]
    mean = math.fsum(cs) / len(cs)
    dev = max(abs(c - mean) for c in cs)
    return IsotropyEstimate(r, mean, dev, dev <= tol, tuple(cs))


def isotropic_e_tensor_residual(point: EvaluationPoint, profile: PsiProfile, c: float) -> np.ndarray:
    """E - (n+1)c F_{yy}/2 at a point, the tensor form of isotropic E-curvature."""
    sj = profile_s_jets(profile, point.r, point.s)
    n, u, s = point.n, point.u, point.s
    psi, psi_s, psi_ss = sj.psi.value, sj.psi.partial([1]), sj.psi.partial([2])
    x, y = point.x, point.y
    Fyy = (psi_ss * (np.outer(x, x) / u - s * (np.outer(x, y) + np.outer(y, x)) / u ** 2
                     + s * s * np.outer(y, y) / u ** 3)
           + (psi - s * psi_s) * (np.eye(n) / u - np.outer(y, y) / u ** 3))
    return e_closed(point, profile) - 0.5 * (n + 1) * c * Fyy
