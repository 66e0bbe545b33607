"""Deterministic stream derivation.

Every stochastic component in the package draws from a numpy Generator whose
seed is derived from a master seed and a stream index through the splitmix64
finalizer.  The derivation is part of the output contract: identical
(master_seed, index) pairs produce identical streams on any platform, so CSV
artifacts re-emitted under the same seed are byte-identical.

Derivation rule (fixed; golden values pinned in tests):

    child(master, index) = splitmix64(splitmix64(master) XOR splitmix64(index + 1))

All arithmetic is modulo 2**64.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One application of the splitmix64 finalizer to a 64-bit integer."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed for stream ``index`` under ``master_seed``."""
    if index < 0:
        raise ValueError(f"stream index must be nonnegative, got {index}")
    return splitmix64(splitmix64(master_seed & _MASK) ^ splitmix64((index + 1) & _MASK))


def stream(master_seed: int, index: int) -> np.random.Generator:
    """numpy Generator for stream ``index`` under ``master_seed``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, index)))
