"""Certified decay weights for truncated absorbing solves.

A truncated solve needs an upper bound on hitting probabilities from
beyond the truncation sphere.  We build phi(g) = exp(-sum of per-unit
weights) with phi superharmonic away from a shallow core: then
P(ever hit W from y) <= phi(y) / min_W phi, and harvesting phi at the
killed boundary of a solve yields a rigorous per-entry gap.

Superharmonicity is certified in two layers:
  - deep states: every state deeper than r_mu + 1 is represented by a
    capped trailing suffix (per-axis letter components capped at
    r_mu + 1; a move of l1 mass <= r_mu can neither flip nor exhaust a
    capped component, so the weighted-length change computed on the
    capped suffix is exact).  The condition is checked for every such
    suffix.
  - shallow states: checked exactly on the ball of radius r_mu + 2, and
    re-checked numerically on every solve region.
"""

from __future__ import annotations

import itertools
import math

from .words import FreeWord, ball

OMEGA_CAP = 8.0


def _directions(d1, d2):
    dirs = []
    for fac, d in ((1, d1), (2, d2)):
        for axis in range(d):
            for sign in (1, -1):
                dirs.append((fac, axis, sign))
    return dirs


def weighted_length(word, omega):
    wt = 0.0
    for fac, vec in word.letters:
        for axis, v in enumerate(vec):
            if v:
                wt += omega[(fac, axis, 1 if v > 0 else -1)] * abs(v)
    return wt


def phi_value(word, omega):
    return math.exp(-weighted_length(word, omega))


def _capped_vectors(d, cap, max_norm):
    """Nonzero vectors with per-axis magnitude <= cap and l1 norm <= max_norm."""
    rng = range(-cap, cap + 1)
    out = []
    for vec in itertools.product(rng, repeat=d):
        if any(vec) and sum(abs(v) for v in vec) <= max_norm:
            out.append(vec)
    return out


def _suffix_states(d1, d2, r_mu):
    """Capped representative suffixes of all deep states.

    A deep state's minimal trailing suffix has total mass >= r_mu + 1 while
    the part after its first letter has mass <= r_mu; the first letter is
    capped per axis at r_mu + 1.
    """
    cap = r_mu + 1
    tails = ball(d1, d2, r_mu)  # includes the empty tail
    out = []
    for fac, d in ((1, d1), (2, d2)):
        for head in _capped_vectors(d, cap, cap * d):
            head_word = FreeWord.letter(fac, head)
            for tail in tails:
                if tail.starts_with_factor(fac):
                    continue
                tau = FreeWord(head_word.letters + tail.letters)
                if tau.length() >= r_mu + 1:
                    out.append(tau)
    return out


def _condition_value(tau, moves, omega):
    """sum_xi mu(xi) exp(Wt(tau) - Wt(tau xi)); must be <= 1."""
    base = weighted_length(tau, omega)
    total = 0.0
    for xi, p in moves:
        total += p * math.exp(base - weighted_length(tau * xi, omega))
    return total


class DecayCertificate:
    """Per-unit weights omega with certified superharmonicity of phi."""

    def __init__(self, spec, margin=1e-9, sweeps=4):
        self.spec = spec
        self.margin = margin
        dirs = _directions(spec.d1, spec.d2)
        states = _suffix_states(spec.d1, spec.d2, spec.r_mu)
        states += ball(spec.d1, spec.d2, spec.r_mu + 2)
        self.states = states
        omega = {s: 0.0 for s in dirs}
        for _ in range(sweeps):
            for s in dirs:
                omega[s] = self._max_feasible(omega, s)
        self.omega = omega
        self.worst = max(_condition_value(t, spec.moves, omega) for t in states)
        self.valid = self.worst <= 1.0 + 1e-12

    def _max_feasible(self, omega, s):
        lo, hi = 0.0, OMEGA_CAP
        trial = dict(omega)

        def ok(val):
            trial[s] = val
            return all(_condition_value(t, self.spec.moves, trial)
                       <= 1.0 - self.margin for t in self.states)

        if not ok(lo):
            return 0.0
        if ok(hi):
            return hi
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def phi(self, word):
        return phi_value(word, self.omega)

    def rate_summary(self):
        return {s: math.exp(-w) for s, w in self.omega.items()}


_CACHE = {}


def decay_certificate(spec):
    """Cached certificate per walk measure."""
    key = (spec.d1, spec.d2, tuple((w.letters, p) for w, p in spec.moves))
    cert = _CACHE.get(key)
    if cert is None:
        cert = DecayCertificate(spec)
        _CACHE[key] = cert
    return cert
