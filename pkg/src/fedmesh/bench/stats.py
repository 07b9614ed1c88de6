from __future__ import annotations

import math
from typing import Iterable


def geometric_mean(values: Iterable[float]) -> float:
    """n-th root of the product of n positive values, computed in log space."""
    vals = list(values)
    if not vals:
        raise ValueError("geometric mean of an empty sequence")
    if any(not v > 0 for v in vals):
        raise ValueError("geometric mean needs strictly positive values")
    return math.exp(math.fsum(math.log(v) for v in vals) / len(vals))
