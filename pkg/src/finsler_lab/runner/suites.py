"""Classification, cross-validation and rigidity suites over a seeded sample set."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .. import __version__
from ..curvature import (berwald_conditions, berwald_from_spray_jets, e_closed_from_scalars,
                         e_from_spray_jets, isotropic_e_residual, isotropic_e_tensor_residual, s_curvature)
from ..errors import FinslerError, ProfileDomainError
from ..flatness import (FlatnessParams, RigidityParams, corollary_pq_residuals, default_grid, first_order_data,
                        fit_k1_psi, fit_k_hash, hash_residual_jet, is_riemannian, isotropy_consistency_residual,
                        pfdf_psi_residuals, rigidity_chain_residuals, rigidity_family, star_residual,
                        third_y_derivatives)
from ..jets import Jet
from ..profiles import EvaluationPoint, PsiProfile
from ..spray import ClosedFormSpray, GeneralSpray, compute_PQ, fd_spray
from .config import RunConfig
from .sampling import draw_samples

FLAGS = ("berwald", "projectively_flat", "dually_flat", "pf_and_df", "isotropic_E", "riemannian")

# (quantity, tolerance) for the cross-validation table; all deviations are relative to 1 + |reference|.
XVAL_ROWS = (
    ("spray", 1e-9),
    ("spray_fd", 1e-4),
    ("S", 1e-10),
    ("E_closed_form_spray", 1e-9),
    ("E_general_spray", 1e-9),
    ("B", 1e-9),
    ("berwald_scalar_vs_tensor", 0.5),
)

ISOTROPY_S_POINTS = 9


def _amax(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _rel(a, ref) -> float:
    return _amax(np.asarray(a) - np.asarray(ref)) / (1.0 + _amax(ref))


def _fmean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def _chebyshev_s(r: float, count: int) -> list[float]:
    nodes = np.cos((2 * np.arange(count) + 1) * np.pi / (2 * count))[::-1]
    return [float(0.9 * r * t) for t in nodes]


def verdict(residual_max: float, config: RunConfig) -> str:
    if not math.isfinite(residual_max):
        return "inconclusive"
    if residual_max <= config.tolerance_zero:
        return "holds"
    if residual_max >= config.threshold_nonzero:
        return "fails"
    return "inconclusive"


@dataclass
class _Context:
    config: RunConfig
    profile: PsiProfile
    closed: ClosedFormSpray
    general: GeneralSpray
    suites: tuple[str, ...]


def _sample_record(ctx: _Context, point: EvaluationPoint) -> dict[str, Any]:
    cfg, profile = ctx.config, ctx.profile
    n, r, s = point.n, point.r, point.s
    metric = ctx.general.metric
    sc = compute_PQ(profile, r, s)
    Gj = ctx.general.jets(point, 3)
    B_gen = berwald_from_spray_jets(Gj)
    rec: dict[str, Any] = {"berwald": _amax(B_gen)}
    rec["berwald_scalar"] = max(abs(v) for v in berwald_conditions(sc))

    if "classify" in ctx.suites or "rigidity" in ctx.suites:
        d = first_order_data(metric, point)
        rec["hamel"] = _amax(d.F_xy.T @ point.y - d.F_x)
        L = first_order_data(metric, point, square=True)
        rec["dual_flat"] = _amax(L.F_xy.T @ point.y - 2.0 * L.F_x)
        rec["pfdf_pairs"] = list(zip(d.F_x.tolist(), (d.F * d.F_y).tolist()))
        w = r * r - s * s
        rec["c_pair"] = ((n + 1) * (sc.P - s * sc.P_s) + w * (sc.Q_s - s * sc.Q_ss),
                         (n + 1) * (sc.psi - s * sc.psi_s))
        try:
            est = isotropic_e_residual(profile, r, _chebyshev_s(r, ISOTROPY_S_POINTS), n, cfg.tolerance_zero)
            c_here = est.c_mean if cfg.c == "scan" else float(cfg.c)
            dev = est.c_deviation if cfg.c == "scan" else max(abs(c - c_here) for c in est.c_values)
            tensor = _amax(isotropic_e_tensor_residual(point, profile, c_here))
            rec["isotropic_E"] = max(dev, tensor)
        except FinslerError:
            rec["isotropic_E"] = math.nan
        rec["riemannian"] = _amax(third_y_derivatives(metric, point))

    if "validate" in ctx.suites:
        G_gen = np.array([g.value for g in Gj])
        G_closed = ctx.closed(point)
        Cj = ctx.closed.jets(point, 3)
        trace_jet = math.fsum(g.partial_unit(k) for k, g in enumerate(Gj))
        E_closed = e_closed_from_scalars(point, sc)
        E_gen = e_from_spray_jets(Gj)
        E_cf = e_from_spray_jets(Cj)
        rec["xval"] = {
            "spray": _rel(G_closed, G_gen),
            "spray_fd": _rel(fd_spray(metric, point), G_gen),
            "S": abs(s_curvature(point, sc) - trace_jet) / (1.0 + abs(trace_jet)),
            "E_closed_form_spray": _rel(E_closed, E_cf),
            "E_general_spray": _rel(E_closed, E_gen),
            "B": _rel(berwald_from_spray_jets(Cj), B_gen),
        }
    return rec


def _guarded(ctx: _Context) -> Callable[[tuple[int, EvaluationPoint]], dict]:
    def run(item):
        i, p = item
        try:
            return _sample_record(ctx, p)
        except FinslerError as exc:
            raise ProfileDomainError(f"sample {i} at x={p.x.tolist()}, y={p.y.tolist()}: {exc}") from exc
    return run


def _witnesses(values: Sequence[float], samples: Sequence[EvaluationPoint], k: int = 3) -> list[dict]:
    def key(i):
        v = values[i]
        return (0 if math.isnan(v) else 1, -v if not math.isnan(v) else 0.0, i)
    order = sorted(range(len(values)), key=key)[:k]
    return [{"index": i, "x": samples[i].x.tolist(), "y": samples[i].y.tolist(), "residual": values[i]}
            for i in order]


def _flag(name: str, values: Sequence[float], samples, config: RunConfig) -> dict[str, Any]:
    finite = [v for v in values if not math.isnan(v)]
    rmax = max(values, key=lambda v: math.inf if math.isnan(v) else v) if values else 0.0
    return {
        "flag": name,
        "verdict": verdict(rmax, config),
        "residual_max": rmax,
        "residual_mean": _fmean(finite) if len(finite) == len(values) else math.nan,
        "witnesses": _witnesses(values, samples),
    }


def _ls(pairs) -> tuple[float, float]:
    num = math.fsum(a * b for a, b in pairs)
    den = math.fsum(b * b for _, b in pairs)
    k = num / den if den > 0 else 0.0
    return k, max((abs(a - k * b) for a, b in pairs), default=0.0)


def _fit_constants(config: RunConfig, records) -> dict[str, dict[str, Any]]:
    out = {}
    k1_pairs = [pair for rec in records for pair in rec["pfdf_pairs"]]
    c_pairs = [rec["c_pair"] for rec in records]
    for key, pairs in (("k1", k1_pairs), ("c", c_pairs)):
        fixed = getattr(config, key)
        if fixed == "scan":
            value, resid = _ls(pairs)
            out[key] = {"mode": "scan", "value": value, "fit_residual": resid}
        else:
            resid = max((abs(a - fixed * b) for a, b in pairs), default=0.0)
            out[key] = {"mode": "fixed", "value": float(fixed), "fit_residual": resid}
    return out


def classify_section(config: RunConfig, samples, records, constants) -> list[dict[str, Any]]:
    k1 = constants["k1"]["value"]
    pfdf = [max((abs(a - k1 * b) for a, b in rec["pfdf_pairs"]), default=0.0) for rec in records]
    series = {
        "berwald": [rec["berwald"] for rec in records],
        "projectively_flat": [rec["hamel"] for rec in records],
        "dually_flat": [rec["dual_flat"] for rec in records],
        "pf_and_df": pfdf,
        "isotropic_E": [rec["isotropic_E"] for rec in records],
        "riemannian": [rec["riemannian"] for rec in records],
    }
    return [_flag(name, series[name], samples, config) for name in FLAGS]


def validate_section(config: RunConfig, samples, records) -> list[dict[str, Any]]:
    rows = []
    for name, tol in XVAL_ROWS:
        if name == "berwald_scalar_vs_tensor":
            scalar = max(rec["berwald_scalar"] for rec in records)
            bmax = max(rec["berwald"] for rec in records)
            lv, bv = verdict(scalar, config), verdict(bmax, config)
            agree = lv == bv and lv != "inconclusive"
            rows.append({"quantity": name, "max_deviation": 0.0 if agree else 1.0, "mean_deviation":
                         0.0 if agree else 1.0, "tolerance": tol, "consistent": agree,
                         "scalar_max": scalar, "berwald_max": bmax, "scalar_verdict": lv, "berwald_verdict": bv})
            continue
        vals = [rec["xval"][name] for rec in records]
        worst = max(vals)
        rows.append({"quantity": name, "max_deviation": worst, "mean_deviation": _fmean(vals),
                     "tolerance": tol, "consistent": worst <= tol,
                     "witness": _witnesses(vals, samples, 1)[0]})
    return rows


def _grid(config: RunConfig, profile: PsiProfile) -> list[tuple[float, float]]:
    lo, hi = config.effective_r_range(profile)
    rs = [r for r in (0.1, 0.3, 0.5, 0.7) if lo <= r <= hi]
    if len(rs) < 2:
        rs = [float(v) for v in np.linspace(lo, hi, 6)[1:-1]]
    grid = default_grid(rs)
    return [(r, s) for r, s in grid if profile.domain.admits(r, s) and profile(r, s) > 0]


def rigidity_section(config: RunConfig, profile: PsiProfile, samples, records, constants) -> dict[str, Any]:
    n = config.n
    tol, thr = config.tolerance_zero, config.threshold_nonzero
    grid = _grid(config, profile)
    r_values = sorted({r for r, _ in grid})
    notes: list[str] = []

    k1 = constants["k1"]["value"]
    k1_sample_resid = max((abs(a - k1 * b) for rec in records for a, b in rec["pfdf_pairs"]), default=0.0)
    k1_psi, k1_psi_resid = fit_k1_psi(profile, grid)
    if config.k1 != "scan":
        k1_psi = float(config.k1)
        k1_psi_resid = max(max(abs(v) for v in pfdf_psi_residuals(profile, r, s, FlatnessParams(k1_psi)))
                           for r, s in grid)

    by_r = [isotropic_e_residual(profile, r, [s for rr, s in grid if rr == r], n, tol) for r in r_values]
    c = constants["c"]["value"]
    if config.c == "scan":
        c_dev = max(e.c_deviation for e in by_r)
    else:
        c_dev = max(abs(v - c) for e in by_r for v in e.c_values)
    c_means = [e.c_mean for e in by_r]
    cross_r = max(c_means) - min(c_means)

    fparams = FlatnessParams(k1)
    pq = [(compute_PQ(profile, r, s), r, s) for r, s in grid]
    cor_P = max(abs(corollary_pq_residuals(sc, sc.psi, fparams)[0]) for sc, _, _ in pq)
    cor_Q = max(abs(sc.Q) for sc, _, _ in pq)
    try:
        iso = max(abs(isotropy_consistency_residual(sc, profile.jet(r, s), c, tol)) for sc, r, s in pq)
        iso_block = {"applicable": True, "residual_max": iso}
    except FinslerError as exc:
        iso_block = {"applicable": False, "reason": str(exc)}

    if config.k_fn is not None:
        kfn = config.radial(config.k_fn)
        k_block = {"mode": "k_fn", "expression": config.k_fn}
        params_for = {r: RigidityParams(k_fn=kfn) for r in r_values}
    else:
        fits = [(r, *fit_k_hash(profile, r, [s for rr, s in grid if rr == r])) for r in r_values]
        k_block = {"mode": "fitted_per_r", "values": [{"r": r, "k": k, "fit_residual": res} for r, k, res in fits]}
        params_for = {r: RigidityParams(k_fn=lambda _r, k=k: k) for r, k, _ in fits}

    chain = [rigidity_chain_residuals(profile, r, s, params_for[r]) for r, s in grid]
    star = [star_residual(profile, r, s, params_for[r]) for r, s in grid]
    ident = []
    for (r, s), st in zip(grid, star):
        hj: Jet = hash_residual_jet(profile, r, s, params_for[r])
        ident.append(abs(hj.partial([1]) - st))
    residuals = {
        "hash": max(abs(h) for h, _, _ in chain),
        "star": max(abs(v) for v in star),
        "2star": max(abs(v) for _, v, _ in chain),
        "2hash": max(abs(v) for _, _, v in chain),
        "star_is_hash_derivative": max(ident),
    }

    riem = is_riemannian(profile.metric(), samples, tol)
    gap = 2.0 * c - k1
    degenerate = abs(gap) <= tol * (1.0 + abs(k1))
    if degenerate:
        notes.append(f"degenerate: 2c - k1 ≈ 0 (2c - k1 = {gap:.3g}); k(r) = k1 gamma(r)/(2c - k1) undefined")

    endpoint = None
    if config.k_fn is not None and config.k2_fn is not None:
        fam = rigidity_family(RigidityParams(k_fn=config.radial(config.k_fn), k2_fn=config.radial(config.k2_fn)),
                              config.effective_r_range(profile))
        endpoint = {"k_fn": config.k_fn, "k2_fn": config.k2_fn,
                    "max_deviation": max(abs(profile(r, s) - fam(r, s)) for r, s in grid)}

    pfdf_sample = k1_sample_resid <= tol
    pfdf_psi = k1_psi_resid <= tol
    isotropic = c_dev <= tol
    chain_ok = residuals["hash"] <= tol and residuals["2hash"] <= tol

    def implication(name, premise, conclusion):
        status = "vacuous" if not premise else ("holds" if conclusion else "violated")
        return {"name": name, "premise": premise, "conclusion": conclusion, "status": status}

    implications = [
        implication("pf_and_df => P = k1 psi/2, Q = 0", pfdf_sample, cor_P <= tol and cor_Q <= tol),
        implication("pf_and_df and isotropic_E => riemannian", pfdf_sample and isotropic, bool(riem)),
        implication("hash and 2hash => riemannian", chain_ok, bool(riem)),
        implication("psi equations => sample-side pf_and_df", pfdf_psi, pfdf_sample),
        implication("sample-side pf_and_df => psi equations", pfdf_sample, pfdf_psi),
    ]
    if any(imp["status"] == "violated" for imp in implications) and degenerate:
        notes.append("violated implication coincides with the 2c - k1 ≈ 0 boundary case")
    if k1_psi_resid > tol and k1_psi_resid < thr:
        notes.append("psi-side k1 fit residual lies between tolerance_zero and threshold_nonzero")

    return {
        "grid": {"r_values": r_values, "points": len(grid)},
        "k1": {"sample_fit": k1, "sample_residual": k1_sample_resid,
               "psi_fit": k1_psi, "psi_residual": k1_psi_resid},
        "c": {"value": c, "deviation": c_dev, "cross_r_variation": cross_r,
              "per_r": [{"r": e.r, "c": e.c_mean, "deviation": e.c_deviation} for e in by_r]},
        "corollary": {"P_minus_half_k1_psi": cor_P, "Q": cor_Q},
        "isotropy_consistency": iso_block,
        "k": k_block,
        "residuals": residuals,
        "riemannian": {"verdict": "holds" if riem else "fails", "max_third_derivative": riem.max_third,
                       "witness": samples[riem.worst_index].as_dict() | {"index": riem.worst_index}},
        "degenerate_2c_minus_k1": degenerate,
        "endpoint": endpoint,
        "implications": implications,
        "chain_consistent": all(imp["status"] != "violated" for imp in implications),
        "notes": notes,
    }


def run_suites(config: RunConfig, workers: int = 1) -> dict[str, Any]:
    """Run the configured suites and assemble the report mapping (field order is the public schema)."""
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    profile = config.profile()
    samples = draw_samples(config, profile)
    timing["sampling"] = time.perf_counter() - t0

    ctx = _Context(config, profile, ClosedFormSpray(profile), GeneralSpray(profile.metric()), config.suites)
    t0 = time.perf_counter()
    indexed = list(enumerate(samples))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_guarded(ctx), indexed))
    else:
        records = [_guarded(ctx)(item) for item in indexed]
    timing["samples"] = time.perf_counter() - t0

    report: dict[str, Any] = {
        "tool": {"name": "finsler-lab", "version": __version__},
        "config": config.to_dict(),
        "profile": {"name": profile.name, "formula": profile.formula,
                    "r_range_effective": list(config.effective_r_range(profile))},
        "samples": len(samples),
    }
    consistent = True
    constants = None
    if "classify" in config.suites or "rigidity" in config.suites:
        constants = _fit_constants(config, records)
        report["fitted_constants"] = constants
    if "classify" in config.suites:
        t0 = time.perf_counter()
        flags = classify_section(config, samples, records, constants)
        report["flags"] = flags
        consistent &= all(f["verdict"] == "holds" for f in flags)
        timing["classify"] = time.perf_counter() - t0
    if "validate" in config.suites:
        t0 = time.perf_counter()
        rows = validate_section(config, samples, records)
        report["cross_validation"] = rows
        consistent &= all(row["consistent"] for row in rows)
        timing["validate"] = time.perf_counter() - t0
    if "rigidity" in config.suites:
        t0 = time.perf_counter()
        rig = rigidity_section(config, profile, samples, records, constants)
        report["rigidity"] = rig
        consistent &= rig["chain_consistent"]
        timing["rigidity"] = time.perf_counter() - t0
    report["consistent"] = bool(consistent)
    if config.include_timing:
        report["timing"] = timing
    return report


def exit_code(report: dict[str, Any]) -> int:
    return 0 if report["consistent"] else 1
