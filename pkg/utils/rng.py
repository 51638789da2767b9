import zlib
from typing import Dict, Sequence
import numpy as np

# Named child streams of one trial; order is part of the reproducibility contract
STREAM_NAMES = ('sampler', 'signs', 'data')


def seed_sequence(experiment: str, seed: int) -> np.random.SeedSequence:
    """SeedSequence keyed by (experiment name, trial seed)"""
    return np.random.SeedSequence([zlib.crc32(experiment.encode('utf-8')), int(seed)])


def philox(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seq))


def trial_streams(experiment: str, seed: int,
                  names: Sequence[str] = STREAM_NAMES) -> Dict[str, np.random.Generator]:
    """Independent counter-based generators, one per named stream"""
    children = seed_sequence(experiment, seed).spawn(len(names))
    return {name: philox(child) for name, child in zip(names, children)}


def generator(seed: int) -> np.random.Generator:
    """Stand-alone Philox generator for library callers and tests"""
    return philox(np.random.SeedSequence(int(seed)))


def draw_key(rng: np.random.Generator) -> int:
    """Philox key for a keyed stream, taken from a seeded generator"""
    return int(rng.integers(0, 2 ** 63))


def keyed(key: int, t: int) -> np.random.Generator:
    """Generator for draw t of the stream with this key.

    The counter's high word carries t, so draws for different t never overlap
    and can be made in any order from any thread.
    """
    return np.random.Generator(np.random.Philox(key=int(key), counter=[0, 0, 0, int(t)]))
