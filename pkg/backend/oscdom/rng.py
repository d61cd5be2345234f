"""Counter-based random streams keyed by (seed, suite, index)."""
import hashlib

import numpy as np


def stream_key(seed, suite, index):
    digest = hashlib.blake2b(f"{seed}:{suite}:{index}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def stream(seed, suite, index):
    """Independent Generator per work item; identical across runs and worker counts."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, suite, index)))
