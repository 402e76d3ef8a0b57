"""Single-block Grover search: statevector kernels plus the 2-D closed form.

One Grover step is ``G = -I_0 I_y``: flip the sign of the marked amplitude,
then invert every amplitude about the mean.  Starting from the uniform state,
after ``k`` steps the marked amplitude is ``sin((2k+1)*theta)`` and every
unmarked amplitude is ``cos((2k+1)*theta) / sqrt(N-1)``, with
``sin(theta) = 1/sqrt(N)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .qstate import (
    StateVector,
    check_index,
    check_statevector_dim,
    invert_about_mean,
    phase_flip,
)


@dataclass
class QueryLedger:
    """Counts of oracle and diffusion applications made during one run."""

    local_oracle_calls: int = 0
    global_oracle_calls: int = 0
    diffusion_calls: int = 0

    @property
    def total_oracle_calls(self) -> int:
        return self.local_oracle_calls + self.global_oracle_calls


@dataclass(frozen=True)
class SearchSpace:
    n: int
    marked: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"block qubit count must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "marked", check_index(self.marked, self.N))

    @property
    def N(self) -> int:
        return 2**self.n

    @cached_property
    def theta(self) -> float:
        return math.asin(1.0 / math.sqrt(self.N))

    def theta_k(self, k: int) -> float:
        return AngleSchedule(k, self.theta).theta_k


@dataclass(frozen=True)
class AngleSchedule:
    k: int
    theta: float

    @property
    def theta_k(self) -> float:
        return (2 * self.k + 1) * self.theta


def uniform_superposition(space: SearchSpace) -> StateVector:
    check_statevector_dim(space.N)
    return StateVector(np.full(space.N, 1.0 / math.sqrt(space.N), dtype=complex))


def apply_local_oracle(state: StateVector, marked: int, ledger: QueryLedger) -> StateVector:
    marked = check_index(marked, state.dim)
    out = StateVector(phase_flip(state.amps, marked))
    ledger.local_oracle_calls += 1
    return out


def apply_diffusion(state: StateVector, ledger: QueryLedger) -> StateVector:
    """Inversion about the mean, ``-I_0`` (the sign from ``G = -I_0 I_y`` is kept)."""
    out = StateVector(invert_about_mean(state.amps))
    ledger.diffusion_calls += 1
    return out


def grover_step(state: StateVector, space: SearchSpace, ledger: QueryLedger) -> StateVector:
    return apply_diffusion(apply_local_oracle(state, space.marked, ledger), ledger)


def grover_run(space: SearchSpace, k: int, ledger: QueryLedger | None = None) -> StateVector:
    """``G^k`` applied to the uniform superposition."""
    if ledger is None:
        ledger = QueryLedger()
    state = uniform_superposition(space)
    for _ in range(k):
        state = grover_step(state, space, ledger)
    return state


def analytic_state(space: SearchSpace, k: int) -> tuple[float, float]:
    """Return ``(unmarked_amp, marked_amp)`` after ``k`` steps.

    ``unmarked_amp`` is the common amplitude on each basis state other than
    the marked one.
    """
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    theta_k = space.theta_k(k)
    return math.cos(theta_k) / math.sqrt(space.N - 1), math.sin(theta_k)


def success_curve(space: SearchSpace, k: int) -> float:
    """Closed-form probability of measuring the marked item after ``k`` steps."""
    return math.sin(space.theta_k(k)) ** 2


def optimal_iterations(space: SearchSpace) -> int:
    """``round(pi/(4*theta) - 1/2)`` with halves rounded up (N=2 gives 1)."""
    x = math.pi / (4.0 * space.theta) - 0.5
    return max(0, math.floor(x + 0.5))
