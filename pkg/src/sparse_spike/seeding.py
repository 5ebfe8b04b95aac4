"""Deterministic seed derivation.

Every random draw in the package flows through one of two schemes:

* ``component_seed(seed, name)`` -- sub-seed for a named component of a
  generated instance (``"u"``, ``"W"``, ``"rotation"``, ...).  The master
  seed is XORed with a 63-bit hash of the component name, so each
  component can be regenerated independently of the others.

* ``trial_seed(base, algorithm, signal, trial)`` -- seed for one sweep
  trial, mixed from the trial coordinates by hashing.  Results are
  therefore independent of execution order and parallelism width, and
  any single trial can be replayed in isolation.

Generators are ``numpy.random.Generator`` over PCG64; Gaussian sampling
is numpy's ziggurat.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK63 = (1 << 63) - 1


def _name_hash(name: str) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & _MASK63


def component_seed(seed: int, name: str) -> int:
    """Sub-seed for the named component of an instance draw."""
    return (int(seed) ^ _name_hash(name)) & _MASK63


def component_rng(seed: int, name: str) -> np.random.Generator:
    """Fresh generator for the named component."""
    return np.random.Generator(np.random.PCG64(component_seed(seed, name)))


def trial_seed(base_seed: int, algorithm: str, signal: float, trial: int) -> int:
    """Seed for sweep trial (algorithm, signal, trial).

    The signal value is keyed through its shortest exact decimal repr
    (``%.17g``) so the mapping is reproducible from the CSV alone.
    """
    key = f"{int(base_seed)}|{algorithm}|{float(signal):.17g}|{int(trial)}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & _MASK63
