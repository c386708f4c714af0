"""Seed discipline: one 64-bit master seed, independent streams per (trial, purpose)."""
from __future__ import annotations

import zlib

import numpy as np


def purpose_code(tag: str) -> int:
    return zlib.crc32(tag.encode())


def stream(seed: int, trial: int = 0, purpose: str = "engine") -> np.random.Generator:
    """Generator keyed by (seed, trial, purpose), independent of scheduling order."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial), purpose_code(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def trial_seed(seed: int, trial: int) -> int:
    """A reportable 64-bit seed for one trial."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    """Generator of one trial, rebuilt from its reported seed alone."""
    return np.random.default_rng(trial_seed(seed, trial))
