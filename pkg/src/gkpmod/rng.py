"""Counter-based random substreams.

Every shot of every command draws from its own Philox stream whose key is a
stable hash of ``(seed, label, index)``.  Streams are therefore independent
of execution order: serial, threaded and re-run executions produce identical
samples shot by shot.
"""

import hashlib

import numpy as np

__all__ = ["substream"]


def _key128(seed: int, label: str, index: int) -> int:
    digest = hashlib.blake2b(
        f"{seed}|{label}|{index}".encode(), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return the dedicated generator for one (seed, label, index) cell."""
    return np.random.Generator(np.random.Philox(key=_key128(seed, label, index)))
