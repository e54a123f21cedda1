"""Seeded draws of admissible (x, y) pairs."""

from __future__ import annotations

import numpy as np

from ..errors import ConvexityError, JetError, ProfileDomainError, SamplingError, SingularTensorError
from ..profiles import EvaluationPoint, PsiProfile
from ..spray import convexity_check
from .config import RunConfig


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def candidate(rng: np.random.Generator, n: int, r_range: tuple[float, float]) -> EvaluationPoint:
    r = rng.uniform(*r_range)
    x = r * _unit(rng, n)
    y = rng.uniform(0.5, 2.0) * _unit(rng, n)
    return EvaluationPoint(x, y)


def admissible(profile: PsiProfile, point: EvaluationPoint) -> bool:
    try:
        if not profile(point.r, point.s) > 0:
            return False
        return bool(convexity_check(profile.metric(), point))
    except (ProfileDomainError, ConvexityError, SingularTensorError, JetError, ArithmeticError):
        return False


def draw_samples(config: RunConfig, profile: PsiProfile | None = None) -> list[EvaluationPoint]:
    """``config.samples`` admissible points; the seed fixes the whole stream.

    Rejected candidates are redrawn, at most ten attempts per requested sample in total.
    """
    profile = profile or config.profile()
    r_range = config.effective_r_range(profile)
    rng = np.random.default_rng(config.seed)
    out: list[EvaluationPoint] = []
    budget = 10 * config.samples
    while len(out) < config.samples:
        if budget == 0:
            raise SamplingError(
                f"metric domain too small for sampling: {len(out)} of {config.samples} accepted"
                f" after {10 * config.samples} draws")
        budget -= 1
        p = candidate(rng, config.n, r_range)
        if admissible(profile, p):
            out.append(p)
    return out
