"""Seed derivation helpers shared by every stochastic component.

All randomness in the package flows through ``numpy.random.Generator``
instances built from explicit integer seeds. Child seeds are derived with
``child_seed`` so that independent work units (trees in a forest, repeats
in a tuning run, the tuning subset draw) get decorrelated, reproducible
streams that do not depend on execution order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["child_seed", "generator"]


def child_seed(master: int, *keys: int | str) -> int:
    """Derive a 64-bit child seed from a master seed and a key path.

    The same (master, keys) always yields the same child, and distinct key
    paths yield effectively independent seeds. String keys are folded into
    integers so call sites can use readable tags like ``("fold", 2)``.
    """
    parts = [int(master) & 0xFFFFFFFFFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            folded = 0
            for ch in key.encode("utf-8"):
                folded = (folded * 131 + ch) & 0xFFFFFFFFFFFFFFFF
            parts.append(folded)
        else:
            parts.append(int(key) & 0xFFFFFFFFFFFFFFFF)
    seq = np.random.SeedSequence(parts)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for the given seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
