from __future__ import annotations

import numpy as np

I_DBS_MAX = 3.0

# randomness is drawn per epoch of plant time so trajectories do not depend on
# how callers chunk their stepping
EPOCH_SECONDS = 1.0


class Plant:
    """Common stepping interface of the beta-oscillation plants.

    Subclasses implement ``_advance(i_dbs)`` for a block of steps. The clock
    is an integer step count; ``time`` is derived from it so that ``n`` steps
    always land on exactly ``n * dt``.

    ``drive`` tells the closed-loop driver what to feed: ``"pulse"`` plants
    take the instantaneous pulse-train current, ``"amplitude"`` plants take
    the commanded amplitude (their DBS law is phenomenological in it).
    """

    drive = "pulse"

    def __init__(self, dt: float, seed: int):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        steps_per_epoch = EPOCH_SECONDS / dt
        if abs(steps_per_epoch - round(steps_per_epoch)) > 1e-6 * steps_per_epoch:
            raise ValueError(f"dt must divide {EPOCH_SECONDS} s evenly, got {dt}")
        self.dt = float(dt)
        self.seed = int(seed)
        self.steps = 0
        self.steps_per_epoch = int(round(steps_per_epoch))

    @property
    def time(self) -> float:
        return self.steps * self.dt

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    def _check(self, i_dbs, dt):
        if dt is not None and dt != self.dt:
            if not dt > 0:
                raise ValueError(f"dt must be > 0, got {dt}")
            raise ValueError(f"dt {dt} differs from the configured step {self.dt}")
        i_dbs = np.atleast_1d(np.asarray(i_dbs, dtype=float))
        if i_dbs.size and (not np.all(np.isfinite(i_dbs)) or i_dbs.min() < 0.0 or i_dbs.max() > I_DBS_MAX):
            raise ValueError(f"i_dbs must lie in [0, {I_DBS_MAX}] mA")
        return i_dbs

    def step(self, i_dbs: float, dt: float | None = None) -> float:
        """Advance one step with DBS current ``i_dbs`` (mA); return the raw LFP (uV)."""
        return float(self._advance(self._check(i_dbs, dt))[0])

    def run(self, i_dbs, dt: float | None = None) -> np.ndarray:
        """Advance ``len(i_dbs)`` steps; identical to calling :meth:`step` in a loop."""
        return self._advance(self._check(i_dbs, dt))

    def _advance(self, i_dbs: np.ndarray) -> np.ndarray:
        raise NotImplementedError
