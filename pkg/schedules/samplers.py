from functools import lru_cache
from typing import Iterator
import numpy as np
from utils.errors import ContractViolationError
from utils.rng import draw_key, keyed

SCHEMES = ('cycling', 'reshuffle', 'iid')

_IID_BLOCK = 1024


def sampler(scheme: str, N: int, rng: np.random.Generator) -> Iterator[int]:
    """Infinite sequence of 0-based sample indices.

    cycling visits 0..N-1 in order, reshuffle draws a fresh permutation every
    epoch, iid draws uniformly with replacement.
    """
    if scheme not in SCHEMES:
        raise ContractViolationError(f"Unknown sampling scheme '{scheme}', expected one of {SCHEMES}")
    if N < 1:
        raise ContractViolationError(f"Dataset size must be >= 1, got {N}")
    if scheme == 'cycling':
        return _cycling(N)
    if scheme == 'reshuffle':
        return _reshuffle(N, rng)
    return _iid(N, rng)


def _cycling(N):
    t = 0
    while True:
        yield t % N
        t += 1


def _reshuffle(N, rng):
    while True:
        for i in rng.permutation(N):
            yield int(i)


def _iid(N, rng):
    while True:
        for i in rng.integers(0, N, size=_IID_BLOCK):
            yield int(i)


class IndexSequence:
    """Random-access view i_t (t >= 1) over a sampling scheme.

    Random schemes draw from a Philox stream keyed at construction: iid index t
    comes from counter position t, and the permutation of epoch e from
    position e. i_t is a function of t alone, whatever the access order or
    thread.
    """

    def __init__(self, scheme: str, N: int, rng: np.random.Generator = None):
        if scheme not in SCHEMES:
            raise ContractViolationError(f"Unknown sampling scheme '{scheme}', expected one of {SCHEMES}")
        if N < 1:
            raise ContractViolationError(f"Dataset size must be >= 1, got {N}")
        if rng is None and scheme != 'cycling':
            raise ContractViolationError(f"Scheme '{scheme}' needs a random generator")
        self.scheme = scheme
        self.N = N
        self._key = None if scheme == 'cycling' else draw_key(rng)

    @lru_cache(maxsize=4)
    def _epoch(self, e: int) -> np.ndarray:
        return keyed(self._key, e).permutation(self.N)

    def __call__(self, t: int) -> int:
        if t < 1:
            raise ContractViolationError(f"Sample index requested for t={t}, times start at 1")
        if self.scheme == 'cycling':
            return (t - 1) % self.N
        if self.scheme == 'iid':
            return int(keyed(self._key, t).integers(0, self.N))
        e, offset = divmod(t - 1, self.N)
        return int(self._epoch(e)[offset])

    def take(self, T: int) -> np.ndarray:
        return np.array([self(t) for t in range(1, T + 1)], dtype=int)
