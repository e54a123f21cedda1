import numpy as np

from finsler_lab.profiles import EvaluationPoint
from finsler_lab.runner.sampling import admissible, candidate


def random_points(profile, n, count, seed=0, r_range=(1e-3, 0.9)):
    """Admissible points drawn with the runner's sampling recipe."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = candidate(rng, n, r_range)
        if admissible(profile, p):
            out.append(p)
    return out


def random_rotation(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def point(x, y):
    return EvaluationPoint(x, y)
