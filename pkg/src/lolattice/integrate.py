"""Fixed-step RK4 driver shared by the dynamics and semigroup code."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationError


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + (0.5 * h) * k1)
    k3 = rhs(y + (0.5 * h) * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    sample_times: Sequence[float],
    dt: float,
    check_every: int = 50,
) -> list[np.ndarray]:
    """Integrate y' = rhs(y) and return copies of y at the sample times.

    Sample times must be nonnegative and strictly increasing. Each segment
    between consecutive samples is covered by ceil(len/dt) equal substeps, so
    samples are hit exactly. Raises IntegrationError if the state stops being
    finite.
    """
    times = [float(t) for t in sample_times]
    if not times:
        raise ValueError("no sample times given")
    if times[0] < 0.0:
        raise ValueError("sample times must be nonnegative")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be strictly increasing")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    out: list[np.ndarray] = []
    y = np.array(y0)
    t = 0.0
    steps_done = 0
    for target in times:
        span = target - t
        if span > 0.0:
            n = max(1, int(np.ceil(span / dt - 1e-12)))
            h = span / n
            for _ in range(n):
                y = rk4_step(rhs, y, h)
                steps_done += 1
                if steps_done % check_every == 0 and not np.all(np.isfinite(y)):
                    raise IntegrationError(f"non-finite state near t = {t:.6g}")
            t = target
        out.append(y.copy())
    if not np.all(np.isfinite(out[-1])):
        raise IntegrationError(f"non-finite state at t = {t:.6g}")
    return out
