from __future__ import annotations

import numpy as np


def striatal_spike_trains(n: int, rate: float, duration: float, rng: np.random.Generator) -> list[np.ndarray]:
    """Independent homogeneous Poisson spike trains on ``[0, duration)``.

    Each train draws its count from Poisson(rate * duration) and places the
    spikes as sorted uniform order statistics, which is exactly a homogeneous
    Poisson process conditioned on the count.
    """
    if n < 0 or rate < 0 or duration < 0:
        raise ValueError(f"n, rate and duration must be >= 0 (got {n}, {rate}, {duration})")
    trains = []
    for _ in range(int(n)):
        k = rng.poisson(rate * duration) if duration > 0 else 0
        t = np.sort(rng.uniform(0.0, duration, size=k))
        # uniform() can in principle return exact ties; keep times strictly increasing
        if k > 1:
            t = np.unique(t)
        trains.append(t)
    return trains
