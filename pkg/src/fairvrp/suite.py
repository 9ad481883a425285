"""Seeded random instance families used by the benchmarks and acceptance tests."""
from __future__ import annotations

import math

import numpy as np

from .instance import Instance, random_instance

SUITE_SEED = 20240601


def suite_params(count: int = 50, seed: int = SUITE_SEED) -> list:
    """(name, n, K, Q, seed) for ``count`` small instances: n in [5, 8],
    K in {2, 3}, Q either one above the tightest value or n."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(5, 9))
        K = int(rng.choice([2, 3]))
        Q = math.ceil(n / K) + 1 if rng.random() < 0.5 else n
        out.append((f"rand{k:02d}-n{n}-K{K}-Q{Q}", n, K, Q, int(rng.integers(2**31))))
    return out


def suite_instances(count: int = 50, seed: int = SUITE_SEED, budget_pct: float = 110.0) -> list:
    """Instances with budget given as a percentage; resolve it with the
    minimum-distance mode (``bnb.resolve_budget``)."""
    return [random_instance(n, K, Q=Q, seed=s, budget_pct=budget_pct, name=name)
            for name, n, K, Q, s in suite_params(count, seed)]


__all__ = ["SUITE_SEED", "suite_params", "suite_instances"]
