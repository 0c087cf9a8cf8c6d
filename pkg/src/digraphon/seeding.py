"""Deterministic child-seed derivation for batch experiments.

All randomness in the package flows through numpy's PCG64 generator via
explicit integer seeds. Batch runs derive one child seed per cell from the
master seed and the cell's index path, so cells can run in any order (or in
parallel) and still reproduce bit-identically.
"""
from __future__ import annotations

import numpy as np


def child_seed(master: int, *path: int) -> int:
    """64-bit child seed for cell `path` (e.g. (size_index, sample_index))."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
