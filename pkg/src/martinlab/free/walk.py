"""Finitely supported random walks on Z^d1 * Z^d2: specification, path
simulation, the stay-radius constant, and transitional-set construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .. import _engine
from ..errors import (DomainError, NumericalError, PreconditionError,
                      ResourceError, SchemaError)
from .words import FreeWord, ball, word_from_document

LAZY_ALPHA = 0.9


@dataclass(frozen=True)
class FreeWalkSpec:
    """Probability measure mu on reduced words, with derived constants.

    If the raw measure gives no mass to the identity, the stored measure is
    its alpha = 0.9 lazification (mu(e) > 0 makes the walk aperiodic); the
    Green rescaling alpha * G_lazy = G applies when comparing to the raw
    walk, but hitting probabilities are unchanged.
    """

    d1: int
    d2: int
    moves: tuple  # (FreeWord, probability)
    lazified: bool
    r_mu: int = field(init=False)
    k_mu: int = field(init=False)

    def __post_init__(self):
        total = sum(p for _, p in self.moves)
        if abs(total - 1.0) > 1e-12:
            raise SchemaError(f"mu must sum to 1 (got {total})")
        if any(p < 0 for _, p in self.moves):
            raise SchemaError("negative probability")
        radius = max((w.length() for w, p in self.moves if p > 0), default=0)
        object.__setattr__(self, "r_mu", radius)
        object.__setattr__(self, "k_mu", len(ball(self.d1, self.d2, radius)))

    @staticmethod
    def from_measure(d1, d2, mu, lazify_if_needed=True):
        """mu: mapping FreeWord -> probability (or iterable of pairs)."""
        pairs = list(mu.items()) if isinstance(mu, dict) else list(mu)
        merged = {}
        for w, p in pairs:
            merged[w] = merged.get(w, 0.0) + float(p)
        lazified = False
        if lazify_if_needed and merged.get(FreeWord.identity(), 0.0) <= 0.0:
            merged = {w: LAZY_ALPHA * p for w, p in merged.items()}
            e = FreeWord.identity()
            merged[e] = merged.get(e, 0.0) + (1.0 - LAZY_ALPHA)
            lazified = True
        moves = tuple(sorted(((w, p) for w, p in merged.items() if p > 0),
                             key=lambda wp: wp[0].sort_key()))
        return FreeWalkSpec(d1, d2, moves, lazified)

    def mu(self, word):
        for w, p in self.moves:
            if w == word:
                return p
        return 0.0

    def support(self):
        return [w for w, _ in self.moves]

    def to_document(self):
        return {"d1": self.d1, "d2": self.d2,
                "mu": [{"word": w.to_document(), "p": p} for w, p in self.moves],
                "lazified": self.lazified}

    # -- engine encoding (cached) -------------------------------------------

    def _encoded(self):
        enc = getattr(self, "_enc_cache", None)
        if enc is None:
            enc = _encode_moves(self)
            object.__setattr__(self, "_enc_cache", enc)
        return enc


def parse_walk(document):
    """Parse the walk schema {"d1": int, "d2": int, "mu": [...]} (dict or
    JSON text)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    try:
        d1, d2 = int(document["d1"]), int(document["d2"])
        raw = document["mu"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc
    if d1 < 1 or d2 < 1:
        raise SchemaError("factor ranks must be positive")
    mu = []
    for item in raw:
        try:
            w = word_from_document(item["word"], d1, d2)
            mu.append((w, float(item["p"])))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed mu entry {item!r}: {exc}") from exc
    return FreeWalkSpec.from_measure(d1, d2, mu)


def _encode_moves(spec):
    """Flatten the measure for the walk engine."""
    dmax = max(spec.d1, spec.d2)
    ptr, fac, vec, probs = [0], [], [], []
    for w, p in spec.moves:
        for f, v in w.letters:
            fac.append(f)
            vec.append(list(v) + [0] * (dmax - len(v)))
        ptr.append(len(fac))
        probs.append(p)
    cdf = np.cumsum(np.array(probs, dtype=np.float64))
    cdf[-1] = max(cdf[-1], 1.0)
    return {
        "dmax": dmax,
        "move_ptr": np.array(ptr, dtype=np.int64),
        "let_fac": np.array(fac, dtype=np.int8),
        "let_vec": np.array(vec, dtype=np.int64).reshape(len(fac), dmax),
        "cdf": cdf,
        "max_move_letters": max((w.size() for w, _ in spec.moves), default=0),
    }


def encode_words(words, dmax):
    """Flatten a list of word lists (target sets) for the walk engine."""
    set_ptr, word_ptr, fac, vec = [0], [0], [], []
    for ws in words:
        for w in ws:
            for f, v in w.letters:
                fac.append(f)
                vec.append(list(v) + [0] * (dmax - len(v)))
            word_ptr.append(len(fac))
        set_ptr.append(len(word_ptr) - 1)
    return {
        "set_ptr": np.array(set_ptr, dtype=np.int64),
        "word_ptr": np.array(word_ptr, dtype=np.int64),
        "fac": np.array(fac, dtype=np.int8),
        "vec": np.array(vec, dtype=np.int64).reshape(len(fac), max(dmax, 1)),
    }


def sample_path(spec, start, steps, seed, stream=0):
    """Trajectory g_0 = start, g_{t+1} = g_t * xi_t with xi_t ~ mu i.i.d.

    Uniforms come from the counter stream (seed, stream, t), so a fixed
    seed reproduces the trajectory exactly.
    """
    from ..rng import counter_uniform

    cdf = np.cumsum([p for _, p in spec.moves])
    cdf[-1] = max(cdf[-1], 1.0)
    moves = [w for w, _ in spec.moves]
    traj = [start]
    g = start
    for t in range(steps):
        u = float(counter_uniform(seed, stream, t))
        idx = int(np.searchsorted(cdf, u, side="right"))
        idx = min(idx, len(moves) - 1)
        g = g * moves[idx]
        traj.append(g)
    return traj


def first_visit_times(spec, start, target_sets, episodes, seed, max_steps,
                      base_stream=0, stop_at_first=False):
    """First-visit step index per target set for each episode (-1 = never).

    Episode ep consumes uniforms (seed, base_stream + ep, t); semantics are
    identical in the compiled and pure backends.
    """
    enc = spec._encoded()
    tgt = encode_words(target_sets, enc["dmax"])
    start_word = encode_words([[start]], enc["dmax"])
    return _engine.first_visit_times(
        enc["move_ptr"], enc["let_fac"], enc["let_vec"], enc["cdf"],
        start_word["word_ptr"], start_word["fac"], start_word["vec"],
        tgt["set_ptr"], tgt["word_ptr"], tgt["fac"], tgt["vec"],
        int(episodes), int(base_stream), int(seed), int(max_steps),
        bool(stop_at_first), int(enc["max_move_letters"]))


def estimate_R_mu(spec, r_cap=None):
    """Smallest R such that every reachable element of B(e, r_mu) is hit by
    a positive-probability path staying inside B(e, R).

    Unreachable ball elements (the measure need not generate the whole
    group) are excluded from the requirement and reported.
    """
    targets = ball(spec.d1, spec.d2, spec.r_mu)
    support = [w for w in spec.support() if not w.is_identity]
    if not support:
        raise PreconditionError("measure has no nontrivial support")
    cap = r_cap if r_cap is not None else max(spec.r_mu * 6, spec.r_mu + 8)
    # coarse reachability sweep to spot never-reachable targets
    reachable = _reachable_subset(targets, support, cap)
    wanted = [t for t in targets if t in reachable]
    for R in range(max(spec.r_mu, 1), cap + 1):
        if _reached_within(wanted, support, R):
            return R, {"unreachable": [t for t in targets if t not in reachable]}
    raise NumericalError(f"stay-radius search exceeded the bound {cap}")


def _reachable_subset(targets, support, cap):
    target_set = set(targets)
    seen = {FreeWord.identity()}
    frontier = [FreeWord.identity()]
    found = {FreeWord.identity()} & target_set
    while frontier and len(found) < len(target_set):
        nxt = []
        for g in frontier:
            for m in support:
                h = g * m
                if h.length() > cap or h in seen:
                    continue
                seen.add(h)
                nxt.append(h)
                if h in target_set:
                    found.add(h)
        frontier = nxt
    return found


def _reached_within(targets, support, R):
    seen = {FreeWord.identity()}
    frontier = [FreeWord.identity()]
    missing = set(targets) - seen
    while frontier and missing:
        nxt = []
        for g in frontier:
            for m in support:
                h = g * m
                if h.length() > R or h in seen:
                    continue
                seen.add(h)
                nxt.append(h)
                missing.discard(h)
        frontier = nxt
    return not missing


def transitional_chain(spec, g, h, spacing=None, R_mu=None):
    """Disjoint must-pass sets g . x_i . B(e, r_mu) around prefixes x_i of
    g^-1 h, consecutive sets more than `spacing` apart (default R_mu)."""
    if g == h:
        return []
    if R_mu is None:
        R_mu, _ = estimate_R_mu(spec)
    spacing = R_mu if spacing is None else spacing
    w = g.inverse() * h
    base_ball = ball(spec.d1, spec.d2, spec.r_mu)
    chosen = []
    last_set = None
    for p in range(1, w.size() + 1):
        x = w.prefix(p)
        vset = sorted(g * x * b for b in base_ball)
        if last_set is not None:
            dist = min(a.distance(b) for a in last_set for b in vset)
            if dist <= spacing:
                continue
        if chosen and any(v in s for s in chosen for v in vset):
            continue
        chosen.append(set(vset))
        last_set = vset
    return [sorted(s) for s in chosen]
