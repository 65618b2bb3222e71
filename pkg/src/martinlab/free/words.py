"""Normal-form word algebra on the free product Z^d1 * Z^d2.

A word is an alternating sequence of letters (factor tag, nonzero integer
vector).  Length |g| sums the l1 norms of the letters; the size s(g) counts
the letters.  The word metric is d(g, h) = |g^-1 h|.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

from ..errors import DomainError, RangeError, ResourceError, SchemaError


def _norm1(vec):
    return sum(abs(v) for v in vec)


@total_ordering
@dataclass(frozen=True, eq=False)
class FreeWord:
    """Reduced word: letters alternate factors and no letter is zero."""

    letters: tuple  # ((factor, vec tuple), ...)

    def __post_init__(self):
        prev = None
        for fac, vec in self.letters:
            if fac not in (1, 2):
                raise DomainError("factor tag must be 1 or 2")
            if all(v == 0 for v in vec):
                raise DomainError("zero letter in normal form")
            if prev == fac:
                raise DomainError("consecutive letters share a factor")
            prev = fac

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity():
        return FreeWord(())

    @staticmethod
    def letter(factor, vec):
        vec = (vec,) if isinstance(vec, int) else tuple(int(v) for v in vec)
        return FreeWord(((factor, vec),))

    @staticmethod
    def from_letters(seq):
        """Normalize an arbitrary letter sequence (merging and cancelling)."""
        out = []
        for fac, vec in seq:
            vec = (vec,) if isinstance(vec, int) else tuple(int(v) for v in vec)
            if all(v == 0 for v in vec):
                continue
            if out and out[-1][0] == fac:
                merged = tuple(a + b for a, b in zip(out[-1][1], vec))
                out.pop()
                if any(v != 0 for v in merged):
                    out.append((fac, merged))
            else:
                out.append((fac, vec))
        return FreeWord(tuple(out))

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other):
        return FreeWord.from_letters(self.letters + other.letters)

    def inverse(self):
        return FreeWord(tuple((fac, tuple(-v for v in vec))
                              for fac, vec in reversed(self.letters)))

    def length(self):
        return sum(_norm1(vec) for _, vec in self.letters)

    def size(self):
        return len(self.letters)

    def prefix(self, p):
        """Prefix of size p (the first p letters)."""
        if not (0 <= p <= self.size()):
            raise RangeError(f"prefix size {p} outside 0..{self.size()}")
        return FreeWord(self.letters[:p])

    def distance(self, other):
        return (self.inverse() * other).length()

    def starts_with_factor(self, factor):
        return bool(self.letters) and self.letters[0][0] == factor

    # -- plumbing ----------------------------------------------------------

    @property
    def is_identity(self):
        return not self.letters

    def __eq__(self, other):
        return isinstance(other, FreeWord) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.length(), self.size(), self.letters)

    def __repr__(self):
        if not self.letters:
            return "e"
        names = {1: "a", 2: "b"}
        parts = []
        for fac, vec in self.letters:
            v = vec[0] if len(vec) == 1 else vec
            parts.append(f"{names[fac]}{v}" if len(vec) == 1 else f"{names[fac]}{list(vec)}")
        return ".".join(parts)

    def to_document(self):
        return [[fac, list(vec)] for fac, vec in self.letters]


def word_from_document(doc, d1, d2):
    """Parse [[factor, [ints]], ...] (or the string 'e') into a FreeWord."""
    if doc == "e" or doc == [] or doc is None:
        return FreeWord.identity()
    if not isinstance(doc, (list, tuple)):
        raise SchemaError(f"word document must be a list, got {doc!r}")
    letters = []
    for item in doc:
        try:
            fac, vec = int(item[0]), tuple(int(v) for v in item[1])
        except (TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"malformed letter {item!r}: {exc}") from exc
        if fac not in (1, 2):
            raise SchemaError("factor tag must be 1 or 2")
        want = d1 if fac == 1 else d2
        if len(vec) != want:
            raise SchemaError(f"letter {item!r} has wrong rank (want {want})")
        letters.append((fac, vec))
    return FreeWord.from_letters(letters)


def _factor_elements(d, max_norm):
    """Nonzero vectors of Z^d with l1 norm <= max_norm (norm-sorted)."""
    out = []

    def rec(prefix, remaining, axes_left):
        if axes_left == 1:
            for v in range(-remaining, remaining + 1):
                out.append(prefix + (v,))
            return
        for v in range(-remaining, remaining + 1):
            rec(prefix + (v,), remaining - abs(v), axes_left - 1)

    rec((), max_norm, d)
    return [v for v in out if any(x != 0 for x in v)]


def ball(d1, d2, r, max_words=2_000_000):
    """All reduced words of length <= r, sorted by (length, size, letters)."""
    if r < 0:
        raise DomainError("radius must be nonnegative")
    words = [FreeWord.identity()]
    frontier = [(FreeWord.identity(), 0)]
    while frontier:
        nxt = []
        for w, used in frontier:
            budget = r - used
            if budget <= 0:
                continue
            last = w.letters[-1][0] if w.letters else None
            for fac, d in ((1, d1), (2, d2)):
                if fac == last:
                    continue
                for vec in _factor_elements(d, budget):
                    nw = FreeWord(w.letters + ((fac, vec),))
                    nxt.append((nw, used + _norm1(vec)))
            if len(words) + len(nxt) > max_words:
                raise ResourceError(f"ball of radius {r} exceeds {max_words} words")
        words.extend(w for w, _ in nxt)
        frontier = nxt
    return sorted(words)
