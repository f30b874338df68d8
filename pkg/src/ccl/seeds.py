"""Deterministic RNG streams derived from a root seed and a stream name."""

from __future__ import annotations

import random


def derive_rng(seed, stream: str) -> random.Random:
    """A Random instance determined by (seed, stream), independent across streams.

    String seeding hashes with a stable algorithm, so streams are reproducible
    across processes and Python versions.
    """
    return random.Random("%s/%s" % (seed, stream))
