"""Finitely supported invariant kernels on the thickened lattice Z^d x {1..N}.

A kernel is a finite family of weighted moves (dx, from-level, to-level).
This module owns representation and validation, the tilt and lazification
transforms, exact convolution powers on dense boxes, truncated Green sums
(dense term-by-term, or Fourier-grid doubling for large 2-d boxes), and the
bounded reachability check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import _engine
from .errors import DomainError, ResourceError, SchemaError

MASS_TOL = 1e-12
DEFAULT_CELL_BUDGET = 80_000_000

MARKOV = "markov"
SUB_MARKOV = "strictly-sub-markov"
GENERAL = "general"


@dataclass(frozen=True)
class LatticeKernel:
    """Z^d-invariant transition kernel with finitely many moves."""

    d: int
    N: int
    offsets: np.ndarray  # (E, d) int64
    frm: np.ndarray  # (E,) int32, 0-based
    to: np.ndarray  # (E,) int32, 0-based
    weights: np.ndarray  # (E,) float64, > 0
    support_radius: int = field(init=False)
    row_masses: np.ndarray = field(init=False)
    mass_class: str = field(init=False)

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise SchemaError("d and N must be positive")
        if self.offsets.shape != (len(self.weights), self.d):
            raise SchemaError("offset array shape mismatch")
        if np.any(self.weights < 0):
            raise SchemaError("negative weight")
        if not np.all(np.isfinite(self.weights)):
            raise SchemaError("non-finite weight")
        keys = {(tuple(dx), int(k), int(j)) for dx, k, j in zip(self.offsets, self.frm, self.to)}
        if len(keys) != len(self.weights):
            raise SchemaError("duplicate (dx, from, to) key")
        if np.any(self.frm < 0) or np.any(self.frm >= self.N):
            raise SchemaError("from-level out of range")
        if np.any(self.to < 0) or np.any(self.to >= self.N):
            raise SchemaError("to-level out of range")
        pos = self.weights > 0
        radius = int(np.abs(self.offsets[pos]).sum(axis=1).max()) if pos.any() else 0
        object.__setattr__(self, "support_radius", radius)
        masses = np.zeros(self.N)
        np.add.at(masses, self.frm, self.weights)
        object.__setattr__(self, "row_masses", masses)
        if np.all(np.abs(masses - 1.0) <= MASS_TOL):
            cls = MARKOV
        elif np.all(masses <= 1.0 + MASS_TOL) and np.any(masses < 1.0 - MASS_TOL):
            cls = SUB_MARKOV
        else:
            cls = GENERAL
        object.__setattr__(self, "mass_class", cls)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_entries(d, N, entries):
        """Build from {(dx tuple, from 1-based, to 1-based): weight} or an iterable
        of (dx, from, to, weight)."""
        if isinstance(entries, dict):
            items = [(dx, k, j, w) for (dx, k, j), w in entries.items()]
        else:
            items = list(entries)
        items = [((e[0],) if np.isscalar(e[0]) else tuple(e[0]), e[1], e[2], e[3]) for e in items]
        items.sort(key=lambda e: (e[0], e[1], e[2]))
        if any(len(dx) != d for dx, _, _, _ in items):
            raise SchemaError("offset dimension mismatch")
        offsets = np.array([dx for dx, _, _, _ in items], dtype=np.int64).reshape(len(items), d)
        frm = np.array([k - 1 for _, k, _, _ in items], dtype=np.int32)
        to = np.array([j - 1 for _, _, j, _ in items], dtype=np.int32)
        w = np.array([float(x) for _, _, _, x in items], dtype=np.float64)
        return LatticeKernel(d, N, offsets, frm, to, w)

    def entries(self):
        """Iterate (dx tuple, from 1-based, to 1-based, weight)."""
        for dx, k, j, w in zip(self.offsets, self.frm, self.to, self.weights):
            yield tuple(int(v) for v in dx), int(k) + 1, int(j) + 1, float(w)

    def to_document(self):
        return {
            "d": self.d,
            "N": self.N,
            "entries": [
                {"dx": list(dx), "from": k, "to": j, "w": w} for dx, k, j, w in self.entries()
            ],
        }

    # -- derived quantities ------------------------------------------------

    def mean_step(self):
        """Per-level mean displacement: (N, d) array of sum_x x p_{k,.}(0,x)."""
        out = np.zeros((self.N, self.d))
        np.add.at(out, self.frm, self.offsets * self.weights[:, None])
        return out

    def offset_bounds(self):
        """(min, max) offset per axis over positive-weight moves."""
        pos = self.weights > 0
        if not pos.any():
            return np.zeros(self.d, np.int64), np.zeros(self.d, np.int64)
        return self.offsets[pos].min(axis=0), self.offsets[pos].max(axis=0)


def parse_kernel(document):
    """Parse the kernel schema (dict or JSON text) into a LatticeKernel."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("kernel document must be an object")
    try:
        d = int(document["d"])
        N = int(document["N"])
        raw = document["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc
    if d < 1 or N < 1:
        raise SchemaError("d and N must be positive")
    items = []
    for e in raw:
        try:
            dx = tuple(int(v) for v in e["dx"])
            items.append((dx, int(e["from"]), int(e["to"]), float(e["w"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed entry {e!r}: {exc}") from exc
    if any(not (1 <= k <= N and 1 <= j <= N) for _, k, j, _ in items):
        raise SchemaError("level index out of range")
    return LatticeKernel.from_entries(d, N, items)


def tilt(kernel, u):
    """Reweight moves by exp(u . dx); support is unchanged."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (kernel.d,) or not np.all(np.isfinite(u)):
        raise DomainError(f"tilt vector must be a finite length-{kernel.d} vector")
    expo = kernel.offsets @ u
    if np.any(np.abs(expo) > 700.0):
        bad = int(np.argmax(np.abs(expo)))
        raise DomainError(f"tilt overflows at entry dx={tuple(kernel.offsets[bad])}")
    return LatticeKernel(kernel.d, kernel.N, kernel.offsets, kernel.frm, kernel.to,
                         kernel.weights * np.exp(expo))


def lazify(kernel, alpha):
    """Mix with the identity: alpha * kernel + (1 - alpha) * stay-in-place."""
    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        return kernel
    items = {((tuple(dx)), k, j): w * alpha for dx, k, j, w in kernel.entries()}
    zero = (0,) * kernel.d
    for k in range(1, kernel.N + 1):
        key = (zero, k, k)
        items[key] = items.get(key, 0.0) + (1.0 - alpha)
    return LatticeKernel.from_entries(kernel.d, kernel.N, items)


# -- convolution powers ----------------------------------------------------


@dataclass(frozen=True)
class MassField:
    """Dense n-step mass p^(n)_{k,j}(0, x) on its support box."""

    n: int
    lo: np.ndarray  # (d,) lower corner of the box
    values: np.ndarray  # (N, N, *box_shape)

    @property
    def box_shape(self):
        return self.values.shape[2:]

    def value_at(self, x, k, j):
        """p^(n)_{k,j}(0, x) with 1-based levels; 0 outside the box."""
        idx = np.asarray(x, dtype=np.int64).reshape(-1) - self.lo
        if np.any(idx < 0) or np.any(idx >= np.array(self.box_shape)):
            return 0.0
        return float(self.values[(k - 1, j - 1) + tuple(idx)])

    def row_masses(self):
        axes = tuple(range(1, 2 + len(self.box_shape)))
        return self.values.sum(axis=axes)


def convolution_power(kernel, n, cell_budget=DEFAULT_CELL_BUDGET):
    """Exact dense n-step convolution power of the kernel.

    Raises ResourceError when the final support box would exceed the cell
    budget (the message reports the required box).
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    lo_off, hi_off = kernel.offset_bounds()
    shape_final = tuple(int(n * (hi_off[a] - lo_off[a]) + 1) for a in range(kernel.d))
    cells = math.prod(shape_final) * kernel.N * kernel.N
    if cells > cell_budget:
        raise ResourceError(
            f"n={n} needs a {'x'.join(map(str, shape_final))} box "
            f"({cells} cells) over budget {int(cell_budget)}")
    lo = np.zeros(kernel.d, dtype=np.int64)
    values = np.zeros((kernel.N, kernel.N) + (1,) * kernel.d)
    for k in range(kernel.N):
        values[(k, k) + (0,) * kernel.d] = 1.0
    for _ in range(n):
        lo, values = _conv_step(kernel, lo, values)
    return MassField(n, lo, values)


def _conv_step(kernel, lo, values):
    lo_off, hi_off = kernel.offset_bounds()
    shape = np.array(values.shape[2:], dtype=np.int64)
    new_lo = lo + lo_off
    new_shape = tuple(int(s) for s in shape + (hi_off - lo_off))
    out = np.zeros(values.shape[:2] + new_shape)
    _engine.conv_step(values, out, kernel.offsets, kernel.frm, kernel.to,
                      kernel.weights, (lo - new_lo).astype(np.int64))
    return new_lo, out


def convolve_fields(kernel_N, a: MassField, b: MassField):
    """Convolution of two mass fields (oracle for the m+n split identity).

    Reference implementation, clarity over speed; used by tests only.
    """
    lo = a.lo + b.lo
    shape = tuple(sa + sb - 1 for sa, sb in zip(a.box_shape, b.box_shape))
    out = np.zeros((kernel_N, kernel_N) + shape)
    for idx in np.ndindex(*b.box_shape):
        block = b.values[(slice(None), slice(None)) + idx]  # (N, N)
        if not block.any():
            continue
        sl = tuple(slice(i, i + s) for i, s in zip(idx, a.box_shape))
        contrib = np.tensordot(a.values, block, axes=([1], [0]))  # (N, *box, N)
        contrib = np.moveaxis(contrib, -1, 1)
        out[(slice(None), slice(None)) + sl] += contrib
    return MassField(a.n + b.n, lo, out)


# -- Green sums ------------------------------------------------------------


@dataclass(frozen=True)
class GreenEstimate:
    """Truncated Green sum with a fitted geometric tail bound."""

    partial: float
    n_max: int
    tail_bound: float
    divergence_flag: bool
    terms: np.ndarray | None = None

    @property
    def value(self):
        return self.partial


def _fit_tail(terms, n_max):
    """Geometric tail bound fitted on the last recorded positive terms.

    Also flags divergence when the fitted ratio is ~1 or when the second
    half of the range still contributes >= 5% of the partial sum (the
    signature of polynomially growing partial sums).
    """
    terms = np.asarray(terms, dtype=float)
    partial = float(terms.sum())
    pos = np.nonzero(terms > 0)[0]
    if len(pos) == 0:
        return partial, 0.0, False
    tail_window = terms[max(0, len(terms) - 10):]
    if np.all(tail_window <= 0.0):
        return partial, 0.0, False
    last_idx = pos[-10:]
    if len(last_idx) >= 2:
        gaps = np.diff(last_idx)
        ratios = (terms[last_idx[1:]] / terms[last_idx[:-1]]) ** (1.0 / gaps)
        r = float(np.exp(np.mean(np.log(ratios))))
    else:
        r = 0.0
    diverging = r >= 1.0 - 1e-6
    if n_max >= 200 and partial > 0:
        half = float(terms[: len(terms) // 2].sum())
        if partial - half >= 0.05 * partial:
            diverging = True
    if diverging or r >= 1.0:
        return partial, math.inf, True
    tail = float(terms[pos[-1]]) * r / (1.0 - r) if r > 0 else 0.0
    return partial, tail, False


def green_partial(kernel, src, dst, n_max, engine="auto",
                  cell_budget=DEFAULT_CELL_BUDGET):
    """Truncated Green sum sum_{n<=n_max} p^(n)((x,k),(y,j)).

    src and dst are ((x vector), level) with 1-based levels.  The dense
    engine tracks every term; for d >= 2 boxes over ~1e6 cells a Fourier
    doubling engine computes the partial sum without materialising fields.
    """
    (x, k), (y, j) = src, dst
    delta = np.atleast_1d(np.asarray(y, dtype=np.int64)) - np.atleast_1d(
        np.asarray(x, dtype=np.int64))
    if engine == "auto":
        lo_off, hi_off = kernel.offset_bounds()
        span = n_max * int((hi_off - lo_off).max(initial=0)) + 1
        cells = (span ** kernel.d) * kernel.N ** 2
        engine = "fft" if (kernel.d >= 2 and cells > 1_000_000) else "dense"
    if engine == "dense":
        return _green_dense(kernel, delta, k - 1, j - 1, n_max, cell_budget)
    if engine == "fft":
        vals, stages = _torus_green_stages(kernel, [delta], n_max)
        series = vals[:, 0, k - 1, j - 1]
        return _green_from_stages(series, stages)
    raise DomainError(f"unknown green engine {engine!r}")


def _green_dense(kernel, delta, k0, j0, n_max, cell_budget):
    lo = np.zeros(kernel.d, dtype=np.int64)
    values = np.zeros((kernel.N, kernel.N) + (1,) * kernel.d)
    for k in range(kernel.N):
        values[(k, k) + (0,) * kernel.d] = 1.0
    terms = np.zeros(n_max + 1)
    shape_arr = np.ones(kernel.d, dtype=np.int64)
    for n in range(n_max + 1):
        if n > 0:
            lo, values = _conv_step(kernel, lo, values)
            shape_arr = np.array(values.shape[2:], dtype=np.int64)
            if values.size > cell_budget:
                raise ResourceError(
                    f"green box exceeded budget at n={n} ({values.size} cells)")
        idx = delta - lo
        if np.all(idx >= 0) and np.all(idx < shape_arr):
            terms[n] = values[(k0, j0) + tuple(idx)]
    partial, tail, div = _fit_tail(terms, n_max)
    return GreenEstimate(partial, n_max, tail, div, terms)


def _green_from_stages(series, stages):
    partial = float(series[-1].real)
    diffs = np.abs(np.diff(series.real))
    if len(diffs) >= 2 and diffs[-2] > 0:
        rho = float(diffs[-1] / diffs[-2])
    else:
        rho = 0.0
    if rho >= 1.0 - 1e-6:
        return GreenEstimate(partial, int(stages[-1]), math.inf, True)
    tail = float(diffs[-1]) * rho / (1.0 - rho) if rho > 0 else float(diffs[-1] if len(diffs) else 0.0)
    return GreenEstimate(partial, int(stages[-1]), tail, False)


# -- Fourier-grid engines ---------------------------------------------------


def torus_sizes(kernel, deltas, n_max):
    """Smallest per-axis FFT sizes so that no term n <= n_max folds onto any
    requested displacement (p^(n) has l1 support radius n * support_radius)."""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=np.int64))
    reach = n_max * kernel.support_radius
    sizes = []
    for a in range(kernel.d):
        need = int(np.abs(deltas[:, a]).max()) + reach + 1
        sizes.append(scipy.fft.next_fast_len(need))
    return tuple(sizes)


def _psi_grid_rows(kernel, u, xi_rows, xi_cols_list):
    """psi_u on a chunk of the frequency grid: (rows, cols..., N, N) complex."""
    N = kernel.N
    mesh = np.meshgrid(xi_rows, *xi_cols_list, indexing="ij")
    shape = mesh[0].shape
    out = np.zeros(shape + (N, N), dtype=np.complex128)
    tilt_w = kernel.weights if u is None else kernel.weights * np.exp(kernel.offsets @ u)
    for dx, k, j, w in zip(kernel.offsets, kernel.frm, kernel.to, tilt_w):
        phase = sum(mesh[a] * dx[a] for a in range(kernel.d))
        out[..., k, j] += w * np.exp(1j * phase)
    return out


def _torus_green_stages(kernel, deltas, n_max, u=None, sizes=None,
                        chunk_rows=None):
    """Partial Green sums at displacements `deltas` via matrix doubling.

    Returns (values[stage, T, N, N] complex, stage_n array); values at stage
    s are the partial sums through n = 2^(s+1) - 1.  With the default grid
    sizes no term folds, so the sums are exact; explicitly smaller sizes
    give folded sums (valid when the omitted mass is negligible, e.g. for
    centered chains evaluated near the origin).
    """
    deltas = np.atleast_2d(np.asarray(deltas, dtype=np.int64))
    if sizes is None:
        sizes = torus_sizes(kernel, deltas, n_max)
    if chunk_rows is None:
        chunk_rows = max(1, int(4_000_000 / max(1, math.prod(sizes[1:]))))
    n_stages = max(1, math.ceil(math.log2(n_max + 1)))
    stage_n = [2 ** (s + 1) - 1 for s in range(n_stages)]
    xi_axes = [2.0 * np.pi * np.fft.fftfreq(M) for M in sizes]
    T, N = len(deltas), kernel.N
    acc = np.zeros((n_stages, T, N, N), dtype=np.complex128)
    total = math.prod(sizes)
    rows = xi_axes[0]
    for start in range(0, len(rows), chunk_rows):
        sl = slice(start, min(start + chunk_rows, len(rows)))
        psi = _psi_grid_rows(kernel, u, rows[sl], xi_axes[1:])
        grid_shape = psi.shape[:-2]
        eye = np.broadcast_to(np.eye(N), grid_shape + (N, N))
        S = eye + psi
        P = psi
        phases = []
        mesh = np.meshgrid(rows[sl], *xi_axes[1:], indexing="ij")
        for t in range(T):
            ph = sum(mesh[a] * deltas[t, a] for a in range(kernel.d))
            phases.append(np.exp(-1j * ph))
        for s in range(n_stages):
            if s > 0:
                A = P @ psi
                S = S + A @ S
                P = A @ P
            for t in range(T):
                acc[s, t] += np.einsum("...kj,...->kj", S, phases[t])
    return acc / total, np.array(stage_n)


def torus_term_trace(kernel, deltas, n_max, u=None, margin=8.0):
    """Per-step values p^(n) at the given displacements, n = 0..n_max.

    Uses a folded grid sized from the kernel's per-step second moment, so it
    is suitable for centered or mildly drifting kernels whose mass stays
    well inside the window (folding error is a Gaussian tail).
    """
    deltas = np.atleast_2d(np.asarray(deltas, dtype=np.int64))
    w = kernel.weights if u is None else kernel.weights * np.exp(kernel.offsets @ u)
    total = w.sum()
    mom2 = ((kernel.offsets.astype(float) ** 2) * w[:, None]).sum(axis=0) / max(total, 1e-300)
    drift = (kernel.offsets.astype(float) * w[:, None]).sum(axis=0) / max(total, 1e-300)
    sizes = []
    for a in range(kernel.d):
        need = int(np.abs(deltas[:, a]).max() + abs(drift[a]) * n_max
                   + margin * math.sqrt(max(mom2[a], 1e-12) * n_max) + 4)
        sizes.append(scipy.fft.next_fast_len(2 * need + 1))
    xi_axes = [2.0 * np.pi * np.fft.fftfreq(M) for M in sizes]
    mesh = np.meshgrid(*xi_axes, indexing="ij")
    psi = np.zeros(mesh[0].shape + (kernel.N, kernel.N), dtype=np.complex128)
    for dx, k, j, wt in zip(kernel.offsets, kernel.frm, kernel.to, w):
        phase = sum(mesh[a] * dx[a] for a in range(kernel.d))
        psi[..., k, j] += wt * np.exp(1j * phase)
    T = len(deltas)
    phases = np.stack([np.exp(-1j * sum(mesh[a] * deltas[t, a] for a in range(kernel.d)))
                       for t in range(T)])
    out = np.zeros((n_max + 1, T, kernel.N, kernel.N))
    P = np.broadcast_to(np.eye(kernel.N), psi.shape).copy()
    total_cells = math.prod(sizes)
    for n in range(n_max + 1):
        if n > 0:
            P = P @ psi
        for t in range(T):
            out[n, t] = np.einsum("...kj,...->kj", P, phases[t]).real / total_cells
    return out


def field_from_powering(kernel, n, u=None, center=None, margin=8.0):
    """n-step field of the (optionally tilted) kernel on a window around
    `center`, computed by frequency-grid binary powering.

    Exact up to folding of mass beyond the window, which is sized at
    `margin` standard deviations plus one step; suitable for the large-n
    local-limit evaluations where the omitted mass is analytically tiny.
    """
    w = kernel.weights if u is None else kernel.weights * np.exp(kernel.offsets @ u)
    total = w.sum()
    mom2 = ((kernel.offsets.astype(float) ** 2) * w[:, None]).sum(axis=0) / max(total, 1e-300)
    drift = (kernel.offsets.astype(float) * w[:, None]).sum(axis=0) / max(total, 1e-300)
    if center is None:
        center = np.rint(drift * n).astype(np.int64)
    center = np.asarray(center, dtype=np.int64)
    sizes, los = [], []
    for a in range(kernel.d):
        half = int(margin * math.sqrt(max(mom2[a], 1e-12) * n) + kernel.support_radius + 4)
        M = scipy.fft.next_fast_len(2 * half + 1)
        sizes.append(M)
        los.append(center[a] - M // 2)
    xi_axes = [2.0 * np.pi * np.fft.fftfreq(M) for M in sizes]
    mesh = np.meshgrid(*xi_axes, indexing="ij")
    psi = np.zeros(mesh[0].shape + (kernel.N, kernel.N), dtype=np.complex128)
    for dx, k, j, wt in zip(kernel.offsets, kernel.frm, kernel.to, w):
        phase = sum(mesh[a] * dx[a] for a in range(kernel.d))
        psi[..., k, j] += wt * np.exp(1j * phase)
    P = np.broadcast_to(np.eye(kernel.N), psi.shape).copy()
    B = psi
    m = n
    first = True
    while m > 0:
        if m & 1:
            P = B.copy() if first else P @ B
            first = False
        m >>= 1
        if m:
            B = B @ B
    if first:  # n == 0
        P = np.broadcast_to(np.eye(kernel.N), psi.shape).copy()
    # inverse transform each (k, j) entry; roll so the window is contiguous
    spatial_axes = tuple(range(kernel.d))
    vals = scipy.fft.ifftn(np.moveaxis(P, (-2, -1), (0, 1)), axes=tuple(
        2 + a for a in spatial_axes)).real
    shifts = [-(lo % M) for lo, M in zip(los, sizes)]
    vals = np.roll(vals, shift=shifts, axis=tuple(2 + a for a in spatial_axes))
    vals = np.clip(vals, 0.0, None)
    return MassField(n, np.array(los, dtype=np.int64), vals)


# -- reachability -----------------------------------------------------------


@dataclass(frozen=True)
class IrreducibilityReport:
    verdict: str  # irreducible-up-to-radius | not-irreducible-witness | inconclusive
    radius: int
    steps: int
    unreached: tuple
    levels_strongly_connected: bool
    witness: tuple | None = None


def reachability_check(kernel, radius, steps):
    """Bounded-search irreducibility check from (0, level 1).

    Sound semi-decision: 'not-irreducible-witness' is only reported with a
    separating-functional certificate proving the state is unreachable for
    every step count.
    """
    if radius < 1 or steps < 1:
        raise DomainError("radius and steps must be >= 1")
    moves = [(tuple(dx), int(k), int(j)) for dx, k, j, w in zip(
        kernel.offsets, kernel.frm, kernel.to, kernel.weights) if w > 0]
    # level digraph strong connectivity
    adj = [set() for _ in range(kernel.N)]
    for _, k, j in moves:
        adj[k].add(j)
    connected = all(_digraph_reaches_all(adj, s) for s in range(kernel.N))
    reached = {((0,) * kernel.d, 0)}
    frontier = list(reached)
    for _ in range(steps):
        nxt = []
        for x, k in frontier:
            for dx, kk, j in moves:
                if kk != k:
                    continue
                y = tuple(a + b for a, b in zip(x, dx))
                if max(abs(v) for v in y) <= radius + steps * kernel.support_radius:
                    st = (y, j)
                    if st not in reached:
                        reached.add(st)
                        nxt.append(st)
        if not nxt:
            break
        frontier = nxt
    targets = [(x, k) for x in np.ndindex(*(2 * radius + 1,) * kernel.d)
               for k in range(kernel.N)]
    targets = [(tuple(int(v) - radius for v in x), k) for x, k in targets]
    unreached = [t for t in targets if t not in reached]
    if not unreached:
        return IrreducibilityReport("irreducible-up-to-radius", radius, steps, (),
                                    connected)
    if not connected:
        return IrreducibilityReport("not-irreducible-witness", radius, steps,
                                    tuple(unreached), False, unreached[0])
    support = np.unique(kernel.offsets[kernel.weights > 0], axis=0)
    for x, k in unreached:
        cert = _separating_direction(support, np.array(x, dtype=float))
        if cert is not None:
            return IrreducibilityReport("not-irreducible-witness", radius, steps,
                                        tuple(unreached), connected, (x, k))
    return IrreducibilityReport("inconclusive", radius, steps, tuple(unreached),
                                connected)


def _digraph_reaches_all(adj, start):
    seen = {start}
    stack = [start]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(adj)


def _separating_direction(support, x):
    """Direction c with c . dx >= 0 for every move and c . x < 0, if one exists.

    Any reachable point is a nonnegative combination of support moves, so
    such a c certifies that x is unreachable.
    """
    from scipy.optimize import linprog

    d = support.shape[1]
    # minimize x . c subject to -support @ c <= 0, -1 <= c <= 1
    res = linprog(c=x, A_ub=-support.astype(float), b_ub=np.zeros(len(support)),
                  bounds=[(-1, 1)] * d, method="highs")
    if res.status == 0 and res.fun < -1e-9:
        return res.x
    return None
