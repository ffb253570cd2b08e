from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from config.settings import settings
from utils.errors import ConfigurationError

REPEAT_LAST = "repeat-last"
PSEUDORANDOM = "pseudorandom"
CHUNK = 64


@dataclass(frozen=True)
class Address:
    """
    Infinite word sigma_1 sigma_2 ... over the letters 1..n_letters.

    The word is `head` followed by the base word with its first `skip` letters
    dropped. The base word is `prefix` extended either by repeating its last
    letter or by seeded pseudorandom letters, generated in fixed chunks so a
    letter never depends on how deep the word was expanded.
    """

    n_letters: int
    prefix: tuple[int, ...] = ()
    extension: str = REPEAT_LAST
    seed: int = 0
    skip: int = 0
    head: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(c) for c in self.prefix))
        object.__setattr__(self, "head", tuple(int(c) for c in self.head))
        if self.n_letters < 1:
            raise ConfigurationError(f"alphabet needs at least one letter, got {self.n_letters}")
        if self.extension not in (REPEAT_LAST, PSEUDORANDOM):
            raise ConfigurationError(f"unknown extension rule '{self.extension}'")
        if self.extension == REPEAT_LAST and not self.prefix:
            raise ConfigurationError("repeat-last needs a nonempty prefix")
        for c in self.prefix + self.head:
            if not 1 <= c <= self.n_letters:
                raise ConfigurationError(f"letter {c} outside 1..{self.n_letters}")

    # ── constructors ─────────────────────────────────────────
    @classmethod
    def periodic_tail(cls, n_letters: int, word: Sequence[int] | str) -> "Address":
        """`word` followed by its last letter forever; "12" is 1222..."""
        return cls(n_letters, tuple(int(c) for c in word))

    @classmethod
    def random(cls, n_letters: int, seed: int | None = None, prefix: Sequence[int] = ()) -> "Address":
        return cls(n_letters, tuple(prefix), PSEUDORANDOM, settings.SEED if seed is None else int(seed))

    # ── letters ──────────────────────────────────────────────
    def _base(self, start: int, stop: int) -> np.ndarray:
        out = np.empty(max(stop - start, 0), dtype=np.int64)
        if len(out) == 0:
            return out
        positions = np.arange(start, stop)
        fixed = positions < len(self.prefix)
        if self.prefix:
            out[fixed] = np.asarray(self.prefix, dtype=np.int64)[positions[fixed]]
        tail = positions[~fixed]
        if len(tail) == 0:
            return out
        if self.extension == REPEAT_LAST:
            out[~fixed] = self.prefix[-1]
            return out
        offset = tail - len(self.prefix)
        chunks = {int(c): np.random.default_rng([self.seed, int(c)]).integers(1, self.n_letters + 1, CHUNK)
                  for c in np.unique(offset // CHUNK)}
        out[~fixed] = [chunks[int(o // CHUNK)][int(o % CHUNK)] for o in offset]
        return out

    def letters(self, depth: int) -> np.ndarray:
        """sigma_1 .. sigma_depth as an int array."""
        head = np.asarray(self.head[:depth], dtype=np.int64)
        rest = depth - len(head)
        return np.concatenate([head, self._base(self.skip, self.skip + rest)]) if rest > 0 else head

    def word(self, depth: int) -> str:
        return "".join(str(c) for c in self.letters(depth)) + "..."

    # ── shifts ───────────────────────────────────────────────
    def shift(self) -> "Address":
        """sigma_2 sigma_3 ..."""
        if self.head:
            return replace(self, head=self.head[1:])
        return replace(self, skip=self.skip + 1)

    def prepend(self, letter: int) -> "Address":
        """Inverse shift s_n: n sigma_1 sigma_2 ..."""
        return replace(self, head=(int(letter),) + self.head)


def code_distance(sigma: Address, omega: Address, depth: int) -> float:
    """2^-k for the first (1-based) differing index k within depth, else 0."""
    a, b = sigma.letters(depth), omega.letters(depth)
    diff = np.flatnonzero(a != b)
    if len(diff) == 0:
        return 0.0
    return 2.0 ** -(int(diff[0]) + 1)
