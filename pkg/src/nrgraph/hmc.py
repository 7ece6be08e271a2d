"""Hamiltonian Monte Carlo with an identity mass matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HmcConfig", "leapfrog", "hmc_transition"]


@dataclass(frozen=True)
class HmcConfig:
    step_size: float = 1e-2
    leapfrog_steps: int = 20

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if int(self.leapfrog_steps) < 1 or int(self.leapfrog_steps) != self.leapfrog_steps:
            raise ValueError("leapfrog_steps must be a positive integer")


def leapfrog(x, p, grad, step_size, n_steps):
    """Integrate Hamilton's equations for ``-log p`` with unit masses.

    ``grad`` returns the gradient of the log density. Returns the final
    ``(x, p)``; NaNs propagate and are caught by the caller's energy check.
    """
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    p = p + 0.5 * step_size * grad(x)
    for step in range(n_steps):
        x = x + step_size * p
        if step < n_steps - 1:
            p = p + step_size * grad(x)
    p = p + 0.5 * step_size * grad(x)
    return x, p


def hmc_transition(x, log_prob, grad, step_size, n_steps, rng):
    """One HMC update. Returns ``(new_x, accepted, accept_prob)``.

    A non-finite Hamiltonian at the proposal counts as a rejection.
    """
    p0 = rng.standard_normal(np.shape(x))
    h0 = -log_prob(x) + 0.5 * np.dot(p0.ravel(), p0.ravel())
    with np.errstate(all="ignore"):
        x1, p1 = leapfrog(x, p0, grad, step_size, n_steps)
        h1 = -log_prob(x1) + 0.5 * np.dot(p1.ravel(), p1.ravel()) if np.all(np.isfinite(x1)) else np.inf
    log_u = np.log(rng.random())
    if not np.isfinite(h1) or not np.isfinite(h0):
        return np.asarray(x), False, 0.0
    accept_prob = min(1.0, float(np.exp(min(0.0, h0 - h1))))
    if log_u < h0 - h1:
        return x1, True, accept_prob
    return np.asarray(x), False, accept_prob
