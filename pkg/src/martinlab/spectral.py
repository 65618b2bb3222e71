"""Dominant-eigenvalue analysis of the tilted level matrix F(u).

F(u) collects the tilted mass exchanged between levels; its Perron data,
the gradient/Hessian of the dominant eigenvalue, the drift, the convex
minimum, and the direction-to-level-set solve all live here.

Normalization convention (used everywhere downstream): nu(0) sums to 1,
then nu(0) . C(u) = 1, then nu(u) . C(u) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (AssumptionError, ClassError, ContradictionError, DomainError,
                     LevelError, NumericalError, PrimitivityError)
from .kernels import LatticeKernel

GAP_TIE_TOL = 1e-10
UNIT_LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class PerronData:
    """Dominant eigenvalue with positive left (nu) and right (C) vectors."""

    lam: float
    nu: np.ndarray
    C: np.ndarray
    gap: float


@dataclass(frozen=True)
class SpectralProfile:
    """Perron data at a tilt point plus eigenvalue derivatives.

    Q (and Sigma, detQ) are only populated on the unit level set
    lam(u) = 1, where Q = hess - grad grad^T is the Gaussian form of the
    recentered chain.
    """

    u: np.ndarray
    F: np.ndarray
    perron: PerronData
    grad: np.ndarray
    hess: np.ndarray
    Q: np.ndarray | None = None
    Sigma: np.ndarray | None = None
    detQ: float | None = None


@dataclass(frozen=True)
class BoundaryDirection:
    """Unit direction theta paired with its solved point on {lam = 1}."""

    theta: np.ndarray
    u: np.ndarray
    residual_level: float
    residual_dir: float


def assemble_F(kernel, u):
    """Level mass matrix F_{kj}(u) = sum_x p_{kj}(0,x) exp(u.x)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (kernel.d,) or not np.all(np.isfinite(u)):
        raise DomainError(f"u must be a finite length-{kernel.d} vector")
    expo = kernel.offsets @ u
    if np.any(expo > 700.0):
        bad = int(np.argmax(expo))
        raise DomainError(
            f"exp(u.x) overflows at entry dx={tuple(kernel.offsets[bad])}")
    F = np.zeros((kernel.N, kernel.N))
    np.add.at(F, (kernel.frm, kernel.to), kernel.weights * np.exp(expo))
    return F


def grad_F(kernel, u):
    """Entrywise gradient of F(u): (N, N, d) array sum_x x p e^{u.x}."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros((kernel.N, kernel.N, kernel.d))
    scaled = kernel.weights * np.exp(kernel.offsets @ u)
    np.add.at(out, (kernel.frm, kernel.to),
              kernel.offsets.astype(float) * scaled[:, None])
    return out


def _is_primitive(F):
    n = F.shape[0]
    if n == 1:
        return F[0, 0] >= 0
    B = F > 0
    P = B.copy()
    wielandt = (n - 1) ** 2 + 1
    for _ in range(wielandt):
        if P.all():
            return True
        P = P @ B
    return bool(P.all())


def _dominant_pair(F):
    vals, vecs = np.linalg.eig(F)
    order = np.argsort(-np.abs(vals))
    lam = vals[order[0]]
    gap = float(np.abs(vals[order[0]]) - np.abs(vals[order[1]])) if len(vals) > 1 else math.inf
    v = vecs[:, order[0]]
    return lam, v, gap


def perron(F, nu0=None):
    """Perron data of a primitive nonnegative matrix.

    Without `nu0` the matrix is treated as a base-point matrix: nu sums
    to 1 and C is scaled so nu . C = 1.  With `nu0` (chain mode) C is
    scaled so nu0 . C = 1 and nu so nu . C = 1.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DomainError("F must be square")
    if np.any(F < 0):
        raise DomainError("F must be nonnegative")
    N = F.shape[0]
    if N == 1:
        lam = float(F[0, 0])
        nu = np.array([1.0])
        C = np.array([1.0])
        if nu0 is not None:
            C = C / (nu0 @ C)
            nu = nu / (nu @ C)
        return PerronData(lam, nu, C, math.inf)
    if not _is_primitive(F):
        raise PrimitivityError("no positive power within the Wielandt bound")
    lam, v, gap = _dominant_pair(F)
    if abs(lam.imag) > 1e-9 * max(abs(lam), 1.0):
        raise PrimitivityError("dominant eigenvalue pair is complex")
    if gap < GAP_TIE_TOL:
        raise PrimitivityError(f"dominant eigenvalue tie (gap {gap:.2e})")
    lam = float(lam.real)
    _, w, _ = _dominant_pair(F.T)
    v = _positivize(v.real if np.abs(v.imag).max() < 1e-12 else np.abs(v))
    w = _positivize(w.real if np.abs(w.imag).max() < 1e-12 else np.abs(w))
    v, w = _refine(F, lam, v, w)
    if nu0 is None:
        nu = w / w.sum()
        C = v / (nu @ v)
    else:
        C = v / (np.asarray(nu0, dtype=float) @ v)
        nu = w / (w @ C)
    return PerronData(lam, nu, C, gap)


def _positivize(v):
    if v.sum() < 0:
        v = -v
    if np.any(v <= 0):
        raise PrimitivityError("dominant eigenvector is not positive")
    return v


def _refine(F, lam, v, w, sweeps=2):
    """Inverse-iteration polish of the dominant pair (shifted solve)."""
    N = F.shape[0]
    shift = lam * (1.0 + 1e-9) + 1e-300
    for _ in range(sweeps):
        try:
            v_new = np.linalg.solve(F - shift * np.eye(N), v)
            w_new = np.linalg.solve((F - shift * np.eye(N)).T, w)
        except np.linalg.LinAlgError:
            break
        if np.any(v_new == 0) or np.any(w_new == 0):
            break
        v_new = v_new / np.linalg.norm(v_new) * np.sign(v_new.sum())
        w_new = w_new / np.linalg.norm(w_new) * np.sign(w_new.sum())
        if np.all(v_new > 0) and np.all(w_new > 0):
            v, w = v_new, w_new
    return v, w


def kernel_perron(kernel, u=None):
    """Chain-normalized Perron data of F(u) (nu(0) computed first)."""
    base = perron(assemble_F(kernel, np.zeros(kernel.d)))
    if u is None or not np.any(np.asarray(u, dtype=float)):
        return base
    return perron(assemble_F(kernel, u), nu0=base.nu)


def eigenvalue(kernel, u):
    """lam(u), the dominant eigenvalue of F(u)."""
    F = assemble_F(kernel, u)
    if kernel.N == 1:
        return float(F[0, 0])
    lam, _, gap = _dominant_pair(F)
    if gap < GAP_TIE_TOL or abs(lam.imag) > 1e-9 * max(abs(lam), 1.0):
        raise PrimitivityError("dominant eigenvalue not simple at this u")
    return float(lam.real)


def analytic_grad(kernel, u, pd=None):
    """grad lam(u) = nu(u) gradF(u) C(u) (nu . C = 1 normalization)."""
    pd = pd if pd is not None else kernel_perron(kernel, u)
    return np.einsum("k,kjd,j->d", pd.nu, grad_F(kernel, u), pd.C)


def _fd_hessian(kernel, u, step_scale=1e-5):
    """Richardson-extrapolated central differences of the analytic gradient."""
    u = np.asarray(u, dtype=float)
    d = kernel.d
    h = step_scale * (1.0 + np.linalg.norm(u))
    H = np.zeros((d, d))
    for b in range(d):
        e = np.zeros(d)
        e[b] = 1.0

        def diff(hh):
            return (analytic_grad(kernel, u + hh * e)
                    - analytic_grad(kernel, u - hh * e)) / (2.0 * hh)

        D1, D2 = diff(h), diff(h / 2.0)
        H[:, b] = (4.0 * D2 - D1) / 3.0
    return 0.5 * (H + H.T)


def spectral_profile(kernel, u, need_Q=False):
    """Full spectral data at tilt u; Q only on the unit level set."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    F = assemble_F(kernel, u)
    pd = kernel_perron(kernel, u)
    grad = analytic_grad(kernel, u, pd)
    hess = _fd_hessian(kernel, u)
    eigs = np.linalg.eigvalsh(hess)
    if eigs.min() <= -1e-8 * max(eigs.max(), 1.0):
        raise NumericalError(f"Hessian not positive definite at u={u}: {eigs}")
    Q = Sigma = detQ = None
    on_level = abs(pd.lam - 1.0) <= UNIT_LEVEL_TOL
    if need_Q and not on_level:
        raise LevelError(f"lam(u) = {pd.lam} is not within {UNIT_LEVEL_TOL} of 1")
    if on_level:
        Q = hess - np.outer(grad, grad)
        Sigma = np.linalg.inv(Q)
        detQ = float(np.linalg.det(Q))
    return SpectralProfile(u, F, pd, grad, hess, Q, Sigma, detQ)


@dataclass(frozen=True)
class DecompositionReport:
    lam: float
    lam2_mod: float
    projector: np.ndarray
    remainder_norms: np.ndarray
    fitted_rate: float
    certified_rate: float


def spectral_decompose(F, n_max, eps=1e-3):
    """Split F^n into lam^n * (C nu) plus a geometrically small remainder."""
    F = np.asarray(F, dtype=float)
    pd = perron(F)
    pi = np.outer(pd.C, pd.nu)
    vals = np.linalg.eigvals(F)
    mods = np.sort(np.abs(vals))[::-1]
    lam2 = float(mods[1]) if len(mods) > 1 else 0.0
    norms = np.zeros(n_max)
    P = np.eye(F.shape[0])
    for n in range(1, n_max + 1):
        P = P @ F
        norms[n - 1] = np.linalg.norm(P - pd.lam ** n * pi, 2)
    good = norms > 1e-250
    if good.sum() >= 3:
        idx = np.nonzero(good)[0][-5:]
        if len(idx) >= 2:
            ratios = norms[idx[1:]] / norms[idx[:-1]]
            fitted = float(np.exp(np.mean(np.log(ratios))))
        else:
            fitted = 0.0
    else:
        fitted = 0.0
    certified = (lam2 + eps) / pd.lam
    return DecompositionReport(pd.lam, lam2, pi, norms, fitted, certified)


def drift(kernel):
    """Level-averaged mean step; equals grad lam(0) for a markov kernel."""
    if kernel.mass_class != "markov":
        raise ClassError(f"drift requires a markov kernel, got {kernel.mass_class}")
    pd = kernel_perron(kernel)
    vec = pd.nu @ kernel.mean_step()
    g = analytic_grad(kernel, np.zeros(kernel.d), pd)
    if np.linalg.norm(vec - g) > 1e-9:
        raise ContradictionError(
            f"drift {vec} disagrees with analytic gradient {g}")
    centered = bool(np.linalg.norm(vec) <= 1e-10)
    return vec, centered


def min_lambda(kernel, grad_tol=1e-13, max_iter=100):
    """Global minimum of the strictly convex eigenvalue map.

    Damped Newton with the analytic gradient and finite-difference Hessian;
    hyp2_holds reports whether the minimum sits strictly below one.
    """
    u = np.zeros(kernel.d)
    lam = eigenvalue(kernel, u)
    for _ in range(max_iter):
        g = analytic_grad(kernel, u)
        if np.linalg.norm(g) <= grad_tol * max(1.0, lam):
            hyp2 = bool(lam < 1.0 - 1e-10)
            return u, lam, hyp2
        H = _fd_hessian(kernel, u)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        t = 1.0
        for _ in range(60):
            lam_new = eigenvalue(kernel, u + t * step)
            if lam_new < lam:
                break
            t *= 0.5
        else:
            raise NumericalError(
                f"line search stalled at u={u}, |grad|={np.linalg.norm(g):.2e}")
        u = u + t * step
        lam = lam_new
    raise NumericalError(
        f"minimum not located in {max_iter} iterations (|grad|="
        f"{np.linalg.norm(analytic_grad(kernel, u)):.2e})")


def solve_direction(kernel, theta, max_iter=80):
    """The unique u with lam(u) = 1 and grad lam(u) positively parallel
    to theta (the level-set inverse of the gradient-direction map).

    Strategy: bisect along the ray u* + t theta to land on the level set,
    then damped Newton on (grad lam - s theta, lam - 1)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    norm = np.linalg.norm(theta)
    if norm == 0 or theta.shape != (kernel.d,):
        raise DomainError("theta must be a nonzero direction vector")
    theta = theta / norm
    u_star, lam_min, hyp2 = min_lambda(kernel)
    if not hyp2:
        raise AssumptionError(
            f"level-set solve needs min lam < 1 (found {lam_min})")
    t_hi = 1.0
    while eigenvalue(kernel, u_star + t_hi * theta) < 1.0:
        t_hi *= 2.0
        if t_hi > 1e8:
            raise NumericalError("level set not bracketed along theta")
    t_lo = 0.0
    for _ in range(200):
        t_mid = 0.5 * (t_lo + t_hi)
        if eigenvalue(kernel, u_star + t_mid * theta) < 1.0:
            t_lo = t_mid
        else:
            t_hi = t_mid
        if t_hi - t_lo < 1e-12 * (1.0 + t_hi):
            break
    u = u_star + t_hi * theta
    s = float(analytic_grad(kernel, u) @ theta)
    s = max(s, 1e-8)
    best_rn, best_u, best_s = math.inf, u.copy(), s
    for _ in range(max_iter):
        g = analytic_grad(kernel, u)
        lam = eigenvalue(kernel, u)
        res = np.concatenate([g - s * theta, [lam - 1.0]])
        rn = np.linalg.norm(res)
        if rn < best_rn:
            best_rn, best_u, best_s = rn, u.copy(), s
        if rn < 1e-14 * max(1.0, s):
            break
        H = _fd_hessian(kernel, u)
        J = np.zeros((kernel.d + 1, kernel.d + 1))
        J[:kernel.d, :kernel.d] = H
        J[:kernel.d, kernel.d] = -theta
        J[kernel.d, :kernel.d] = g
        try:
            delta = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            raise NumericalError("singular Newton system in direction solve")
        t = 1.0
        for _ in range(40):
            u_try = u + t * delta[:kernel.d]
            s_try = s + t * delta[kernel.d]
            g_try = analytic_grad(kernel, u_try)
            lam_try = eigenvalue(kernel, u_try)
            r_try = np.concatenate([g_try - s_try * theta, [lam_try - 1.0]])
            if np.linalg.norm(r_try) < rn:
                u, s = u_try, max(s_try, 1e-12)
                break
            t *= 0.5
        else:
            break
    if best_rn < math.inf:
        u, s = best_u, best_s
    g = analytic_grad(kernel, u)
    gn = np.linalg.norm(g)
    if gn == 0:
        raise NumericalError("gradient vanished on the level set")
    residual_level = abs(eigenvalue(kernel, u) - 1.0)
    residual_dir = float(np.linalg.norm(g / gn - theta))
    if residual_level > 1e-11 or residual_dir > 1e-9:
        raise NumericalError(
            f"direction solve residuals too large: level {residual_level:.2e}, "
            f"direction {residual_dir:.2e}")
    return BoundaryDirection(theta, u, residual_level, residual_dir)
