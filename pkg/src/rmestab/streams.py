"""Deterministic random substreams.

All randomness is drawn from Philox generators. The 128-bit key is a hash of
``(seed, label)`` and the 256-bit counter is offset by ``index << 128``, so each
(label, index) pair owns a private, non-overlapping stream. Results therefore
do not depend on the order in which draws or blocks are evaluated, which is
what makes sharded evaluation reproduce the serial sequence.
"""

import hashlib

import numpy as np

_COUNTER_SHIFT = 128


def stream_key(seed, *labels):
    """128-bit Philox key for ``seed`` and a tuple of string-able labels."""
    h = hashlib.blake2b(digest_size=16)
    h.update((int(seed) % 2**64).to_bytes(8, "little"))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return np.frombuffer(h.digest(), dtype="<u8").copy()


def keyed_substream(key, index=0):
    """Generator for substream ``index`` under a precomputed :func:`stream_key`."""
    return np.random.Generator(np.random.Philox(key=key, counter=int(index) << _COUNTER_SHIFT))


def substream(seed, label, index=0):
    """Generator for substream ``index`` of the stream named ``label``."""
    labels = label if isinstance(label, tuple) else (label,)
    return keyed_substream(stream_key(seed, *labels), index)
