from __future__ import annotations

import numpy as np


def electrode_distances(n: int, rng: np.random.Generator, d_min: float = 0.5, d_max: float = 2.0) -> np.ndarray:
    """Neuron-to-contact distances in mm, uniform on ``[d_min, d_max]``."""
    return rng.uniform(d_min, d_max, size=n)


def lfp_weights(distances) -> np.ndarray:
    return 1.0 / np.asarray(distances, dtype=float)


def lfp_from_synaptic_currents(currents, weights) -> float:
    """Weighted sum of per-neuron synaptic currents.

    ``weights`` are the fixed distance weights of the recording contact; the
    result is linear in ``currents``.
    """
    currents = np.asarray(currents, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if currents.size == 0:
        return 0.0
    if currents.shape != weights.shape:
        raise ValueError(f"expected {weights.size} currents, got {currents.size}")
    return float(np.dot(weights, currents))
