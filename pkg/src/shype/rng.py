"""Reproducible per-replication random streams.

Counter-based Philox streams keyed on (master seed, replication index) are
independent and identical under any scheduling of replications.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, replication: int = 0) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=[master_seed & (2**64 - 1), replication]))
