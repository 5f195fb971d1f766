"""Counter-based random streams.

One master seed fans out into independent substreams keyed by a fixed
stream id, so e.g. observation noise draws are identical across control
strategies regardless of how many angles the random strategy consumes.
"""

import numpy as np

NOISE_STREAM = 0
ANGLE_STREAM = 1
PLACEMENT_STREAM = 2


def stream_rng(seed, stream):
    """Generator for substream ``stream`` of master ``seed`` (Philox keyed)."""
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
