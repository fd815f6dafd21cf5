"""Deterministic random streams.

All randomness in a run flows from one integer seed.  Each consumer gets an
independent counter-based (Philox) stream keyed by the seed and a stable hash
of the consumer name, so adding consumers never perturbs existing streams.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, consumer: str) -> np.random.Generator:
    """Return the named consumer's generator for this seed."""
    digest = hashlib.sha256(consumer.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "little")
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, key]))


def complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """i.i.d. standard complex Gaussian vector (unit total variance per entry)."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
