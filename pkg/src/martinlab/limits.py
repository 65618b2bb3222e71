"""Characteristic matrices, CLT curves, local-limit error functionals,
the Green asymptote comparison, and Monte Carlo CLT experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassError, DomainError, LevelError
from .kernels import (LatticeKernel, convolution_power, field_from_powering,
                      green_partial, tilt)
from .rng import counter_uniform
from .spectral import (analytic_grad, kernel_perron, solve_direction,
                       spectral_profile)


def round_half_down(v):
    """Closest lattice vector; exact halves m + 1/2 resolve to m."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.floor(v)
    return (w + (v - w > 0.5)).astype(np.int64)


@dataclass(frozen=True)
class CharMatrix:
    """Frequency-domain mass matrices psi_u(xi) and the recentered chi_u(xi)."""

    xi: np.ndarray
    psi: np.ndarray
    chi: np.ndarray


def char_matrix(kernel, u, xi):
    """psi_u(xi)_{kj} = sum_x p e^{u.x} e^{i x.xi}; chi recenters by the
    eigenvalue gradient at u."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (kernel.d,):
        raise DomainError(f"xi must be a length-{kernel.d} vector")
    psi = np.zeros((kernel.N, kernel.N), dtype=np.complex128)
    scaled = kernel.weights * np.exp(kernel.offsets @ u)
    phases = np.exp(1j * (kernel.offsets @ xi))
    np.add.at(psi, (kernel.frm, kernel.to), scaled * phases)
    prof = spectral_profile(kernel, u)
    chi = psi * np.exp(-1j * (prof.grad @ xi))
    return CharMatrix(xi, psi, chi)


def chi_dominant_eigenvalue(kernel, u, xi):
    """Eigenvalue of chi_u(xi) of largest modulus (the CLT expansion's
    lambda_u(xi)); independent oracle for the Gaussian form Q."""
    cm = char_matrix(kernel, u, xi)
    vals = np.linalg.eigvals(cm.chi)
    return vals[np.argmax(np.abs(vals))]


def clt_curve(kernel, u, xi, n):
    """Compare [chi_u(xi/sqrt(n))]^n against exp(-Q_u(xi)/2) C(u) nu(u)."""
    prof = spectral_profile(kernel, u, need_Q=True)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    cm = char_matrix(kernel, u, xi / math.sqrt(n))
    power = np.linalg.matrix_power(cm.chi, n)
    limit = math.exp(-0.5 * float(xi @ prof.Q @ xi)) * np.outer(
        prof.perron.C, prof.perron.nu)
    error = float(np.abs(power - limit).max())
    return power, limit, error


@dataclass(frozen=True)
class LltReport:
    """Sup of the weighted local-limit error functional over the lattice."""

    u: np.ndarray
    n: int
    gamma: float
    sup_error: float
    argmax_x: tuple
    in_box_sup: float
    out_box_bound: float


def llt_error(kernel, u, n, gamma, engine="auto"):
    """A_n / tilde-A_n sup: (2 pi n)^{d/2} tilted n-step mass against its
    Gaussian-projector approximation, weighted by (|x - n grad|/sqrt n)^gamma.

    The sup is taken over the evaluation window and closed off-window by an
    analytic bound on the weighted Gaussian (the mass term is zero there up
    to a folded tail far below the reported errors).
    """
    if not (0.0 <= gamma <= 2.0 * kernel.d):
        raise DomainError(f"gamma must lie in [0, {2 * kernel.d}]")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    prof = spectral_profile(kernel, u, need_Q=True)
    tilted = tilt(kernel, u)
    center = round_half_down(n * prof.grad)
    if engine == "auto":
        lo_off, hi_off = kernel.offset_bounds()
        span = n * int((hi_off - lo_off).max(initial=0)) + 1
        engine = "dense" if span ** kernel.d * kernel.N ** 2 <= 2_000_000 else "fft"
    if engine == "dense":
        fld = convolution_power(tilted, n)
    else:
        fld = field_from_powering(tilted, n, center=center)
    coords = [fld.lo[a] + np.arange(fld.box_shape[a]) for a in range(kernel.d)]
    mesh = np.meshgrid(*coords, indexing="ij")
    x_rel = np.stack([mesh[a] - n * prof.grad[a] for a in range(kernel.d)], axis=-1)
    quad = np.einsum("...a,ab,...b->...", x_rel, prof.Sigma, x_rel)
    gauss_amp = prof.detQ ** -0.5 * np.exp(-quad / (2.0 * n))
    proj = np.outer(prof.perron.C, prof.perron.nu)
    mass = (2.0 * math.pi * n) ** (kernel.d / 2.0) * fld.values
    diff = mass - gauss_amp[None, None] * proj[(...,) + (None,) * kernel.d]
    err = np.abs(diff).max(axis=(0, 1))
    if gamma > 0:
        weight = (np.sqrt(np.einsum("...a,...a->...", x_rel, x_rel)) /
                  math.sqrt(n)) ** gamma
        err = err * weight
    flat = int(np.argmax(err))
    idx = np.unravel_index(flat, err.shape)
    argmax_x = tuple(int(coords[a][idx[a]]) for a in range(kernel.d))
    in_box = float(err[idx])
    out_box = _off_window_bound(prof, fld, n, gamma, center)
    sup = max(in_box, out_box)
    return LltReport(u, n, gamma, sup, argmax_x, in_box, out_box)


def _off_window_bound(prof, fld, n, gamma, center):
    """Weighted-Gaussian sup over lattice points outside the window."""
    d = len(fld.lo)
    lo = fld.lo
    hi = fld.lo + np.array(fld.box_shape) - 1
    drift_pt = n * prof.grad
    # distance from the Gaussian center to the window boundary
    r0 = min(min(drift_pt[a] - lo[a], hi[a] - drift_pt[a]) for a in range(d))
    r0 = max(r0, 0.0)
    sig_min = float(np.linalg.eigvalsh(prof.Sigma).min())
    cnu = float(np.abs(np.outer(prof.perron.C, prof.perron.nu)).max())

    def f(r):
        return (r / math.sqrt(n)) ** gamma * math.exp(-sig_min * r * r / (2.0 * n))

    # the weighted Gaussian peaks at r* = sqrt(gamma n / sigma_min) and
    # decreases beyond it, so the off-window sup sits at max(r0, r*)
    r_star = math.sqrt(gamma * n / sig_min) if gamma > 0 and sig_min > 0 else 0.0
    r_eval = max(r0, r_star)
    peak = f(r_eval) if r_eval > 0 else (1.0 if gamma == 0 else 0.0)
    return prof.detQ ** -0.5 * cnu * peak


def green_vs_asymptote(kernel, theta, t, x, k, j, engine="auto"):
    """(2 pi t)^{(d-1)/2} tilted Green sum at <t grad lam(u)> against the
    closed-form limit C(u)_k nu(u)_j / sqrt(|Q_u| Sigma_u(grad lam))."""
    bd = solve_direction(kernel, theta)
    prof = spectral_profile(kernel, bd.u, need_Q=True)
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    target = round_half_down(t * prof.grad)
    g = prof.grad
    sigma_dir = float(g @ prof.Q @ g) / max(float(g @ g), 1e-300)
    spread = math.sqrt(max(t, 1.0) * sigma_dir) / max(np.linalg.norm(g), 1e-300)
    n_max = int(t + 12.0 * spread + 50)
    tilted = tilt(kernel, bd.u)
    est = green_partial(tilted, (tuple(x), k), (tuple(target), j), n_max,
                        engine=engine)
    lhs = (2.0 * math.pi * t) ** ((kernel.d - 1) / 2.0) * est.partial
    quad = float(g @ prof.Sigma @ g)
    rhs = prof.perron.C[k - 1] * prof.perron.nu[j - 1] / math.sqrt(prof.detQ * quad)
    rel = abs(lhs - rhs) / abs(rhs)
    return lhs, rhs, rel, {"u": bd.u, "target": target, "n_max": n_max,
                           "green": est}


def clt_monte_carlo(kernel, n, samples, seed):
    """Path simulation CLT check: covariance of (X_n - n drift)/sqrt(n) and
    the empirical level distribution, against the Gaussian form and nu(0).

    Per-sample counter-based streams: sample s consumes uniforms indexed
    (seed, s, t), so results are independent of batching.
    """
    if kernel.mass_class != "markov":
        raise ClassError("CLT simulation requires a markov kernel")
    pd = kernel_perron(kernel)
    pvec = analytic_grad(kernel, np.zeros(kernel.d), pd)
    by_level = []
    for lvl in range(kernel.N):
        mask = kernel.frm == lvl
        w = kernel.weights[mask]
        cdf = np.cumsum(w) / w.sum()
        by_level.append((cdf, kernel.offsets[mask], kernel.to[mask]))
    X = np.zeros((samples, kernel.d), dtype=np.int64)
    L = np.zeros(samples, dtype=np.int64)
    streams = np.arange(samples, dtype=np.uint64)
    for t in range(n):
        u = counter_uniform(seed, streams, t)
        for lvl in range(kernel.N):
            mask = L == lvl
            if not mask.any():
                continue
            cdf, offs, tos = by_level[lvl]
            idx = np.searchsorted(cdf, u[mask], side="right")
            idx = np.minimum(idx, len(cdf) - 1)
            X[mask] += offs[idx]
            L[mask] = tos[idx]
    Y = (X - n * pvec) / math.sqrt(n)
    cov = (Y.T @ Y) / samples - np.outer(Y.mean(axis=0), Y.mean(axis=0))
    level_freq = np.bincount(L, minlength=kernel.N) / samples
    return np.atleast_2d(cov), level_freq
