"""First-visit probabilities between word sets, Martin-ratio traces along
target sequences, and the induced first-return kernel on a factor slab.

Truncated solves use a kill boundary for the lower bracket and harvest the
certified decay weight phi at killed exits for the upper bracket (see
certify.py); the region widens until the certified per-entry gap meets the
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..errors import (ContradictionError, DomainError, PreconditionError,
                      StatisticalError, ToleranceError)
from ..kernels import LatticeKernel
from .certify import decay_certificate
from .walk import first_visit_times, transitional_chain
from .words import FreeWord, ball


@dataclass(frozen=True)
class HittingMatrix:
    """First-visit probability matrix between two word lists.

    `values` is the certified lower bracket, `upper` the certified upper
    bracket (solve) or the Wilson upper end (monte-carlo); `error` is the
    per-entry bracket width.  The monte-carlo variant appends an escape
    column (no visit within the step budget).
    """

    rows: tuple
    cols: tuple
    values: np.ndarray
    upper: np.ndarray
    error: np.ndarray
    method: str
    escape: np.ndarray | None = None
    meta: dict | None = None

    def midpoint(self):
        return 0.5 * (self.values + self.upper)


def _solve_region(spec, region_words, targets, phi_over_min):
    """Kill-boundary absorbing solve on `region_words` with target columns
    plus a harvested-phi gap column.

    Returns (hit[n_region, n_targets], gap[n_region], exit_prob[n_region]).
    """
    index = {w: i for i, w in enumerate(region_words)}
    target_index = {w: t for t, w in enumerate(targets)}
    n, T = len(region_words), len(targets)
    rows_i, cols_i, vals = [], [], []
    B = np.zeros((n, T + 2))  # targets | phi harvest | exit mass
    for g, i in index.items():
        for xi, p in spec.moves:
            h = g * xi
            t = target_index.get(h)
            if t is not None:
                B[i, t] += p
                continue
            jdx = index.get(h)
            if jdx is not None:
                rows_i.append(i)
                cols_i.append(jdx)
                vals.append(p)
            else:
                B[i, T] += p * min(1.0, phi_over_min(h))
                B[i, T + 1] += p
    P = scipy.sparse.csr_matrix((vals, (rows_i, cols_i)), shape=(n, n))
    A = scipy.sparse.eye(n, format="csc") - P.tocsc()
    lu = scipy.sparse.linalg.splu(A)
    X = lu.solve(B)
    hit = X[:, :T]
    gap = X[:, T]
    exit_prob = X[:, T + 1]
    return hit, gap, exit_prob


def _check_certificate_on_region(spec, region_words, targets, cert):
    """Direct Pphi <= phi verification on every non-target region state."""
    tset = set(targets)
    for g in region_words:
        if g in tset:
            continue
        total = sum(p * cert.phi(g * xi) for xi, p in spec.moves)
        if total > cert.phi(g) * (1.0 + 1e-9):
            raise ContradictionError(
                f"decay certificate violated at region state {g!r}")


def hitting_matrix(spec, V, W, method="truncated-solve", budget=None, tol=1e-4,
                   seed=0, max_steps=None, region_cap=600_000):
    """First-visit probability matrix P[v, w] = p_v^W(w).

    truncated-solve: kill/harvest sandwich, region widened until the
    certified gap is below `tol` (ToleranceError otherwise).
    monte-carlo: `budget` episodes per row with Wilson half-widths and an
    escape column.
    """
    V = [v if isinstance(v, FreeWord) else FreeWord.from_letters(v) for v in V]
    W = [w if isinstance(w, FreeWord) else FreeWord.from_letters(w) for w in W]
    if not V or not W:
        raise DomainError("V and W must be nonempty")
    if method == "monte-carlo":
        return _hitting_mc(spec, V, W, budget or 10_000, seed, max_steps)
    if method != "truncated-solve":
        raise DomainError(f"unknown method {method!r}")
    cert = decay_certificate(spec)
    min_phi = min(cert.phi(w) for w in W)
    reach = max(w.length() for w in V + W)
    R = reach + spec.r_mu + 2
    while True:
        region = [g for g in ball(spec.d1, spec.d2, R) if g not in set(W)]
        if len(region) > region_cap:
            raise ToleranceError(
                f"solve region exceeded {region_cap} states at R={R} "
                f"(certified gap still above {tol})")
        _check_certificate_on_region(spec, region, W, cert)
        hit, gap, exit_prob = _solve_region(
            spec, region, W, lambda h: cert.phi(h) / min_phi)
        idx = {w: i for i, w in enumerate(region)}
        rows_lower = np.zeros((len(V), len(W)))
        rows_gap = np.zeros(len(V))
        for r, v in enumerate(V):
            if v in set(W):
                rows_lower[r, W.index(v)] = 1.0
            else:
                i = idx[v]
                rows_lower[r] = hit[i]
                rows_gap[r] = gap[i]
        if rows_gap.max(initial=0.0) < tol:
            upper = np.minimum(rows_lower + rows_gap[:, None], 1.0)
            return HittingMatrix(
                tuple(V), tuple(W), rows_lower, upper,
                upper - rows_lower, "truncated-solve",
                meta={"region_radius": R, "region_size": len(region),
                      "max_gap": float(rows_gap.max(initial=0.0)),
                      "certificate_rates": cert.rate_summary()})
        if not cert.valid or all(w == 0 for w in cert.omega.values()):
            raise ToleranceError(
                "no certified decay for this walk; truncated solve cannot "
                "converge")
        R += max(1, spec.r_mu)


def _hitting_mc(spec, V, W, budget, seed, max_steps):
    if budget <= 0:
        raise ToleranceError("monte-carlo budget must be positive")
    max_steps = max_steps or (200 + 40 * max(w.length() for w in W))
    values = np.zeros((len(V), len(W)))
    half = np.zeros((len(V), len(W)))
    escape = np.zeros(len(V))
    for r, v in enumerate(V):
        times = first_visit_times(spec, v, [[w] for w in W], budget, seed,
                                  max_steps, base_stream=r * budget,
                                  stop_at_first=True)
        counts = (times >= 0).sum(axis=0)
        values[r] = counts / budget
        escape[r] = 1.0 - counts.sum() / budget
        half[r] = _wilson_half(counts, budget)
    return HittingMatrix(tuple(V), tuple(W), values,
                         np.minimum(values + half, 1.0), half, "monte-carlo",
                         escape=escape,
                         meta={"episodes": budget, "max_steps": max_steps})


def _wilson_half(counts, n, z=1.959963984540054):
    p = counts / n
    denom = 1.0 + z * z / n
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return half


def reach_probabilities(spec, V, target, tol=1e-4, region_cap=600_000):
    """P(v -> target) for v in V, as a certified [lower, upper] bracket."""
    hm = hitting_matrix(spec, V, [target], tol=tol, region_cap=region_cap)
    return hm.values[:, 0], hm.upper[:, 0]


@dataclass(frozen=True)
class MartinTracePoint:
    target: FreeWord
    value: float
    half_width: float
    lower: float
    upper: float


def martin_ratio_trace(spec, g, targets, method="factorized", budget=200_000,
                       seed=1, tol=1e-4):
    """Martin-kernel trace K(g, g_n) = P(g -> g_n) / P(e -> g_n).

    factorized: certified interval, from transitional hitting-matrix chain
    products when the target admits a chain, otherwise directly from reach
    brackets.  monte-carlo: direct hit-frequency ratio with a delta-method
    sigma.
    """
    e = FreeWord.identity()
    if g == e:
        return [MartinTracePoint(t, 1.0, 0.0, 1.0, 1.0) for t in targets]
    out = []
    for t in targets:
        if method == "monte-carlo":
            out.append(_martin_mc_point(spec, g, t, budget, seed))
        elif method == "factorized":
            lo, up = chain_ratio(spec, g, t, tol=tol)
            out.append(MartinTracePoint(t, 0.5 * (lo + up), 0.5 * (up - lo),
                                        lo, up))
        elif method == "direct-solve":
            lo_pair, up_pair = reach_probabilities(spec, [g, e], t, tol=tol)
            lo = lo_pair[0] / up_pair[1] if up_pair[1] > 0 else math.inf
            up = up_pair[0] / lo_pair[1] if lo_pair[1] > 0 else math.inf
            out.append(MartinTracePoint(t, 0.5 * (lo + up), 0.5 * (up - lo),
                                        lo, up))
        else:
            raise DomainError(f"unknown method {method!r}")
    return out


def _martin_mc_point(spec, g, target, budget, seed):
    e = FreeWord.identity()
    max_steps = 200 + 60 * target.length()
    t_g = first_visit_times(spec, g, [[target]], budget, seed, max_steps,
                            base_stream=0, stop_at_first=True)
    t_e = first_visit_times(spec, e, [[target]], budget, seed, max_steps,
                            base_stream=budget, stop_at_first=True)
    p_g = float((t_g >= 0).mean())
    p_e = float((t_e >= 0).mean())
    if p_e <= 0 or p_g <= 0:
        raise StatisticalError(
            f"no hits on {target!r} within budget; increase budget")
    ratio = p_g / p_e
    rel = math.sqrt((1 - p_g) / (p_g * budget) + (1 - p_e) / (p_e * budget))
    half = ratio * rel
    return MartinTracePoint(target, ratio, half, ratio - half, ratio + half)


def chain_ratio(spec, g, target, tol=1e-4):
    """Transitional-set factorization of K(g, target): interval from
    p_g^{V1} . P_1 ... P_{m-1} . p_{Vm}^{target} over the same with e.

    Inner hitting matrices are computed on translated copies near the
    origin (left invariance), with a fixed element order per set so the
    products compose; falls back to the direct reach bracket when fewer
    than two sets fit.
    """
    e = FreeWord.identity()
    chain = transitional_chain(spec, e, target)
    chain = [VS for VS in chain if _is_chain_set_for(spec, g, target, VS)]
    if len(chain) < 2:
        lo_pair, up_pair = reach_probabilities(spec, [g, e], target, tol=tol)
        lo = lo_pair[0] / up_pair[1] if up_pair[1] > 0 else math.inf
        up = up_pair[0] / lo_pair[1] if lo_pair[1] > 0 else math.inf
        return lo, up
    v1 = chain[0]
    num_lo, num_up = _front_vector(spec, g, v1, tol)
    den_lo, den_up = _front_vector(spec, e, v1, tol)
    cur_lo = cur_up = None
    for a, b in zip(chain[:-1], chain[1:]):
        c = _set_center(a)
        ci = c.inverse()
        hm = hitting_matrix(spec, [ci * v for v in a], [ci * w for w in b],
                            tol=tol)
        if cur_lo is None:
            cur_lo, cur_up = hm.values, hm.upper
        else:
            cur_lo, cur_up = cur_lo @ hm.values, cur_up @ hm.upper
    cl = _set_center(chain[-1]).inverse()
    tail_lo, tail_up = reach_probabilities(
        spec, [cl * v for v in chain[-1]], cl * target, tol=tol)
    num_l = float(num_lo @ cur_lo @ tail_lo)
    num_u = float(num_up @ cur_up @ tail_up)
    den_l = float(den_lo @ cur_lo @ tail_lo)
    den_u = float(den_up @ cur_up @ tail_up)
    return (num_l / den_u if den_u > 0 else math.inf,
            num_u / den_l if den_l > 0 else math.inf)


def _set_center(vset):
    """The ball center of a transitional set (the element minimizing the
    maximal in-set distance; ties resolved canonically)."""
    best = None
    for c in vset:
        radius = max(c.distance(v) for v in vset)
        key = (radius, c.sort_key())
        if best is None or key < best[0]:
            best = (key, c)
    return best[1]


def _front_vector(spec, start, vset, tol):
    hm = hitting_matrix(spec, [start], vset, tol=tol)
    return hm.values[0], hm.upper[0]


def _is_chain_set_for(spec, g, target, vset):
    """True when the set (built from a prefix of `target`) is also a
    transitional set between g and target."""
    w = g.inverse() * target
    centers = {g * w.prefix(p) for p in range(1, w.size() + 1)}
    base = ball(spec.d1, spec.d2, spec.r_mu)
    vset_set = set(vset)
    return any(set(c * b for b in base) == vset_set for c in centers)


# -- induced first-return kernel ---------------------------------------------


def induced_kernel(spec, factor, k1, prefix=None, tol=1e-4, region_cap=600_000):
    """First-return kernel on the k1-neighborhood of a Z^{d_i} slab,
    identified with Z^{d_i} x {1..N}.

    Levels are the ball words of length <= k1 that are trivial or start in
    the other factor; while the walk is outside the slab neighborhood its
    slab projection is frozen (this needs k1 >= r_mu), so excursions return
    at the departure projection and the induced kernel keeps lattice
    support radius <= r_mu.  Returns (kernel, report).
    """
    if factor not in (1, 2):
        raise DomainError("factor must be 1 or 2")
    if k1 < spec.r_mu:
        raise PreconditionError(f"k1 must be >= r(mu) = {spec.r_mu}")
    if prefix is not None and not isinstance(prefix, FreeWord):
        raise DomainError("prefix must be a FreeWord")
    d_lat = spec.d1 if factor == 1 else spec.d2
    other = 2 if factor == 1 else 1
    levels = [w for w in ball(spec.d1, spec.d2, k1)
              if w.is_identity or w.starts_with_factor(other)]
    levels = sorted(levels)  # identity first
    level_index = {w: i for i, w in enumerate(levels)}
    N = len(levels)
    cert = decay_certificate(spec)

    def decompose(word):
        """word = y . h with y the leading factor-`factor` part."""
        if word.letters and word.letters[0][0] == factor:
            y = word.letters[0][1]
            rest = FreeWord(word.letters[1:])
        else:
            y = (0,) * d_lat
            rest = word
        return y, rest

    # returns-from-cone solve, widened until the certified gap passes tol
    R = k1 + spec.r_mu + 2
    while True:
        cone = [h for h in ball(spec.d1, spec.d2, R)
                if h.starts_with_factor(other) and h.length() > k1]
        if len(cone) > region_cap:
            raise ToleranceError(
                f"cone region exceeded {region_cap} states at R={R}")
        ret_lo, ret_gap = _cone_return_solve(spec, cone, levels, level_index,
                                             k1, factor, d_lat, cert)
        if (not cone) or ret_gap.max(initial=0.0) < tol:
            break
        if all(w == 0 for w in cert.omega.values()):
            raise ToleranceError("no certified decay; cone solve cannot converge")
        R += max(1, spec.r_mu)
    cone_index = {h: i for i, h in enumerate(cone)}

    entries_lo = {}
    entries_up = {}

    def add(dst, k_idx, j_idx, lo, up):
        key = (dst, k_idx + 1, j_idx + 1)
        entries_lo[key] = entries_lo.get(key, 0.0) + lo
        entries_up[key] = entries_up.get(key, 0.0) + up

    for k_idx, hk in enumerate(levels):
        for xi, p in spec.moves:
            w = hk * xi
            y, rest = decompose(w)
            if rest.length() <= k1:
                add(y, k_idx, level_index[rest], p, p)
            else:
                # excursion outside the slab neighborhood: the projection y
                # is frozen until return, so returns land at lattice shift y
                ci = cone_index.get(rest)
                if ci is None:
                    raise ContradictionError(
                        f"one-step exit state {rest!r} missing from the cone")
                for j_idx in range(N):
                    lo = p * ret_lo[ci, j_idx]
                    up = p * min(1.0, ret_lo[ci, j_idx] + ret_gap[ci])
                    if up > 0:
                        add(y, k_idx, j_idx, lo, up)

    items = []
    row_upper = np.zeros(N)
    for (dst, k, j), lo in sorted(entries_lo.items()):
        up = entries_up[(dst, k, j)]
        row_upper[k - 1] += up
        mid = 0.5 * (lo + up)
        if mid > 0:
            items.append((dst, k, j, mid))
    kernel = LatticeKernel.from_entries(d_lat, N, items)
    from ..kernels import reachability_check
    from ..spectral import min_lambda

    reach = reachability_check(kernel, radius=2, steps=8 + 4 * N)
    u_star, lam_min, hyp2 = min_lambda(kernel)
    report = {
        "levels": levels,
        "row_mass_upper": row_upper,
        "strictly_sub_markov": bool(np.all(row_upper < 1.0 - 1e-3)),
        "support_radius": kernel.support_radius,
        "support_radius_ok": bool(kernel.support_radius <= spec.r_mu),
        "irreducible": reach.verdict,
        "hyp1_finite_support": True,
        "hyp2_holds": bool(hyp2),
        "lambda_min": float(lam_min),
        "cone_radius": R,
        "cone_size": len(cone),
        "max_gap": float(ret_gap.max(initial=0.0)) if len(cone) else 0.0,
    }
    return kernel, report


def _cone_return_solve(spec, cone, levels, level_index, k1, factor, d_lat,
                       cert):
    """Absorbing solve for excursion returns: from a cone word, the
    distribution over the level reached at first return to depth <= k1."""
    if not cone:
        return np.zeros((0, len(levels))), np.zeros(0)
    other = 2 if factor == 1 else 1
    min_phi = min(cert.phi(w) for w in levels) if levels else 1.0
    index = {h: i for i, h in enumerate(cone)}
    n, T = len(cone), len(levels)
    rows_i, cols_i, vals = [], [], []
    B = np.zeros((n, T + 1))
    for h, i in index.items():
        for xi, p in spec.moves:
            w = h * xi
            if w.length() <= k1:
                if not (w.is_identity or w.starts_with_factor(other)):
                    raise ContradictionError(
                        f"excursion return {w!r} carries a slab shift "
                        f"(k1 >= r(mu) should forbid this)")
                B[i, level_index[w]] += p
            elif w in index:
                rows_i.append(i)
                cols_i.append(index[w])
                vals.append(p)
            elif w.starts_with_factor(other):
                B[i, T] += p * min(1.0, cert.phi(w) / min_phi)
            else:
                raise ContradictionError(
                    f"excursion state {w!r} left the cone sideways")
    # certificate sanity on the cone states
    for h in cone:
        total = sum(p * cert.phi(h * xi) for xi, p in spec.moves)
        if total > cert.phi(h) * (1.0 + 1e-9):
            raise ContradictionError(
                f"decay certificate violated at cone state {h!r}")
    P = scipy.sparse.csr_matrix((vals, (rows_i, cols_i)), shape=(n, n))
    A = scipy.sparse.eye(n, format="csc") - P.tocsc()
    lu = scipy.sparse.linalg.splu(A)
    X = lu.solve(B)
    return X[:, :T], X[:, T]
