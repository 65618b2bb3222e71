"""Martin kernels (truncated-Green ratios and closed-form boundary values),
harmonicity residuals, separation witnesses, and the transience classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassError, ContradictionError, RecurrenceError
from .kernels import (GreenEstimate, green_partial, torus_term_trace)
from .limits import round_half_down
from .spectral import drift as drift_of
from .spectral import kernel_perron, solve_direction

DEFAULT_BASE = "origin-level-1"


@dataclass(frozen=True)
class MartinValue:
    source: tuple
    target: object
    base: tuple
    value: float
    method: str  # ratio-of-green | boundary-formula
    error_bound: float


def _as_state(s, d):
    x, k = s
    x = tuple(int(v) for v in (np.atleast_1d(np.asarray(x, dtype=np.int64))))
    if len(x) != d:
        raise ClassError(f"state position must have dimension {d}")
    return x, int(k)


def martin_kernel_numeric(kernel, src, dst, base=None, n_max=2000, engine="auto"):
    """Ratio of truncated Green sums G(src, dst) / G(base, dst)."""
    base = base if base is not None else ((0,) * kernel.d, 1)
    src = _as_state(src, kernel.d)
    dst = _as_state(dst, kernel.d)
    base = _as_state(base, kernel.d)
    g_src = green_partial(kernel, src, dst, n_max, engine=engine)
    g_base = green_partial(kernel, base, dst, n_max, engine=engine)
    if g_src.divergence_flag or g_base.divergence_flag:
        raise RecurrenceError("Green series shows no geometric decay")
    if g_base.partial <= 0:
        raise RecurrenceError("base Green sum vanished; dst unreachable from base")
    value = g_src.partial / g_base.partial
    rel = 0.0
    if g_src.partial > 0:
        rel += g_src.tail_bound / g_src.partial
    rel += g_base.tail_bound / g_base.partial
    return MartinValue(src, dst, base, value, "ratio-of-green", value * rel)


def martin_kernel_boundary(kernel, src, theta, base=None):
    """Boundary value C(u)_k / C(u)_k0 * exp(u . (x - x0)) at u = u(theta)."""
    base = base if base is not None else ((0,) * kernel.d, 1)
    (x, k) = _as_state(src, kernel.d)
    (x0, k0) = _as_state(base, kernel.d)
    bd = solve_direction(kernel, theta)
    pd = kernel_perron(kernel, bd.u)
    value = (pd.C[k - 1] / pd.C[k0 - 1]
             * math.exp(float(bd.u @ (np.array(x) - np.array(x0)))))
    err = value * (bd.residual_level + bd.residual_dir) * 10.0
    return MartinValue((x, k), tuple(bd.theta), (x0, k0), float(value),
                       "boundary-formula", err)


def minimal_harmonic_check(kernel, theta, box_radius):
    """Largest relative harmonicity residual of h(x,k) = C(u)_k e^{u.x}
    over the centered box of the given radius."""
    if kernel.mass_class != "markov":
        raise ClassError("harmonicity check requires a markov kernel")
    bd = solve_direction(kernel, theta)
    pd = kernel_perron(kernel, bd.u)
    u = bd.u
    coords = [np.arange(-box_radius, box_radius + 1)] * kernel.d
    mesh = np.meshgrid(*coords, indexing="ij")
    ux = sum(mesh[a] * u[a] for a in range(kernel.d))
    worst = 0.0
    for k in range(kernel.N):
        h_here = pd.C[k] * np.exp(ux)
        acc = np.zeros_like(h_here)
        for dx, kk, j, w in zip(kernel.offsets, kernel.frm, kernel.to,
                                kernel.weights):
            if kk != k:
                continue
            acc += w * pd.C[j] * np.exp(ux + float(dx @ u))
        worst = max(worst, float((np.abs(acc - h_here) / h_here).max()))
    return worst


def separation_witness(kernel, theta1, theta2, n, level=1, base=None):
    """Boundary-kernel traces along x_m = <m theta> for a direction theta
    separating u(theta1) from u(theta2).

    The first trace is certified unbounded when it grows by 1e6 over its
    first value (or hits the overflow guard); the second must decrease
    toward 0.  When u(theta1) = 0 the first trace is constant and the
    separation is carried by the second trace alone.
    """
    base = base if base is not None else ((0,) * kernel.d, 1)
    (x0, k0) = _as_state(base, kernel.d)
    bd1 = solve_direction(kernel, theta1)
    bd2 = solve_direction(kernel, theta2)
    if np.linalg.norm(bd1.u - bd2.u) <= 1e-9:
        raise ContradictionError(
            "solved level-set points coincide for distinct directions")
    theta = bd1.u - bd2.u
    theta = theta / np.linalg.norm(theta)
    pd1 = kernel_perron(kernel, bd1.u)
    pd2 = kernel_perron(kernel, bd2.u)
    seq1, seq2 = [], []
    overflow = False
    for m in range(1, n + 1):
        xm = round_half_down(m * theta)
        rel = xm - np.array(x0)
        e1 = float(bd1.u @ rel)
        e2 = float(bd2.u @ rel)
        if max(e1, e2) > 700.0:
            overflow = True
            break
        seq1.append(pd1.C[level - 1] / pd1.C[k0 - 1] * math.exp(e1))
        seq2.append(pd2.C[level - 1] / pd2.C[k0 - 1] * math.exp(e2))
    seq1, seq2 = np.array(seq1), np.array(seq2)
    grows = overflow or (len(seq1) > 1 and seq1[-1] > 1e6 * seq1[0])
    constant1 = bool(abs(float(bd1.u @ theta)) <= 1e-12)
    tail2 = seq2[min(4, max(len(seq2) - 2, 0)):]
    return {
        "theta": theta,
        "seq1": seq1,
        "seq2": seq2,
        "seq1_unbounded": bool(grows),
        "seq1_constant": constant1,
        "seq2_decreasing": bool(len(tail2) > 1 and np.all(np.diff(tail2) < 0)),
        "seq2_ratio": float(seq2[-1] / seq2[0]) if len(seq2) > 1 else 1.0,
        "overflow_guard": overflow,
    }


@dataclass(frozen=True)
class TransienceReport:
    verdict: str  # transient | recurrent
    reason: str
    centered: bool | None
    evidence: dict


def classify_transience(kernel, trace_n=None):
    """Verdict from (d, centering) plus a growth-curve consistency check of
    the diagonal partial Green sums.

    Strictly sub-markov kernels are transient by mass deficit.  Markov
    kernels: transient iff d >= 3 or the drift is nonzero; the evidence
    fits sqrt(n) (d=1) or log(n) (d=2) growth for the recurrent cases and
    requires a converged Green estimate for the transient ones.
    """
    zero = (0,) * kernel.d
    if kernel.mass_class == "strictly-sub-markov":
        est = green_partial(kernel, (zero, 1), (zero, 1), n_max=2000)
        return TransienceReport("transient", "mass deficit (strictly sub-markov)",
                                None, {"green": est})
    if kernel.mass_class != "markov":
        raise ClassError("classification needs a markov or sub-markov kernel")
    pvec, centered = drift_of(kernel)
    transient = kernel.d >= 3 or not centered
    if transient:
        if kernel.d >= 3 and centered:
            evidence = _evidence_bounded_d3(kernel)
        else:
            n_max = trace_n or 2000
            est = green_partial(kernel, (zero, 1), (zero, 1), n_max=n_max)
            consistent = (not est.divergence_flag) and (
                est.tail_bound < 0.05 * max(est.partial, 1e-300))
            evidence = {"kind": "bounded-partial-sums", "green": est,
                        "consistent": bool(consistent)}
        return TransienceReport("transient",
                                "d >= 3" if kernel.d >= 3 else "non-centered",
                                centered, evidence)
    if kernel.d == 1:
        n_max = trace_n or 10_000
        est = green_partial(kernel, (zero, 1), (zero, 1), n_max=n_max)
        S = np.cumsum(est.terms)
        ns = np.arange(n_max + 1)
        sel = ns >= n_max // 10
        r2, coef = _fit_r2(np.sqrt(ns[sel]), S[sel])
        evidence = {"kind": "sqrt-growth", "r2": r2, "slope": coef,
                    "partial": float(S[-1]), "green": est}
    else:
        n_max = trace_n or 1500
        terms = torus_term_trace(kernel, [zero], n_max)[:, 0, 0, 0]
        S = np.cumsum(terms)
        ns = np.arange(n_max + 1)
        sel = ns >= max(50, n_max // 10)
        r2, coef = _fit_r2(np.log(ns[sel]), S[sel])
        evidence = {"kind": "log-growth", "r2": r2, "slope": coef,
                    "partial": float(S[-1])}
    evidence["consistent"] = bool(evidence["r2"] >= 0.99)
    return TransienceReport("recurrent", "centered low dimension", centered,
                            evidence)


def _evidence_bounded_d3(kernel):
    """Power-law extrapolated diagonal Green value for transient centered
    chains in dimension >= 3 (terms decay like n^{-d/2})."""
    import scipy.fft

    from .kernels import _torus_green_stages

    zero = (0,) * kernel.d
    n_max = 4095
    w = kernel.weights
    mom2 = ((kernel.offsets.astype(float) ** 2) * w[:, None]).sum(axis=0) / w.sum()
    sizes = tuple(scipy.fft.next_fast_len(
        int(16.0 * math.sqrt(max(m, 1e-12) * n_max)) + 9) for m in mom2)
    vals, stages = _torus_green_stages(kernel, [zero], n_max, sizes=sizes)
    series = vals[:, 0, 0, 0].real
    # tail(n) ~ A n^{1-d/2}: extrapolate from the last stage increments
    expo = 1.0 - kernel.d / 2.0
    d1, d2 = series[-2] - series[-3], series[-1] - series[-2]
    n1, n2, n3 = stages[-3], stages[-2], stages[-1]
    denom = (n1 ** expo - n2 ** expo)
    A = d1 / denom if denom != 0 else 0.0
    tail = A * (n3 ** expo)
    g_extrap = float(series[-1] + tail)
    return {"kind": "bounded-partial-sums", "green_extrapolated": g_extrap,
            "partial": float(series[-1]), "stage_sums": series,
            "consistent": bool(d2 < d1)}


def _fit_r2(xs, ys):
    """Least-squares line fit returning (R^2, slope)."""
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_res = float(((ys - pred) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return r2, float(coef[0])
