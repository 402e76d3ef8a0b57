"""Conditional quantum search over two equal blocks of ``n`` qubits.

Each block runs its own Grover iteration with a local oracle ``I_{y_i}``; the
joint register stays a product state throughout, and a single global
reflection ``I_Y`` about ``|Y> = |y1>|y2>`` is applied at the end.  Joint
indices follow the big-endian convention of :mod:`cqsearch.qstate`.

The global reflection only negates one amplitude, so it never changes the
probability of measuring ``Y``; what it does change is the entanglement
across the block cut (``schmidt_coefficients`` exposes this).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grover import (
    QueryLedger,
    SearchSpace,
    analytic_state,
    grover_run,
    optimal_iterations,
    uniform_superposition,
)
from .qstate import (
    StateVector,
    check_index,
    check_statevector_dim,
    invert_about_mean,
    new_basis_state,
    phase_flip,
    tensor,
)

# Joint-space Grover baseline is only simulated up to this many qubits.
BASELINE_MAX_QUBITS = 12
SUCCESS_THRESHOLD = 0.9

@dataclass(frozen=True)
class CqsProblem:
    n: int
    y1: int
    y2: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"block qubit count must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "y1", check_index(self.y1, self.N))
        object.__setattr__(self, "y2", check_index(self.y2, self.N))

    @classmethod
    def all_ones(cls, n: int) -> "CqsProblem":
        """Both blocks marked at ``|11...1>``."""
        return cls(n, 2**n - 1, 2**n - 1)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def dim(self) -> int:
        return self.N**2

    @property
    def Y(self) -> int:
        return self.y1 * self.N + self.y2

    @property
    def block1(self) -> SearchSpace:
        return SearchSpace(self.n, self.y1)

    @property
    def block2(self) -> SearchSpace:
        return SearchSpace(self.n, self.y2)

    @property
    def theta(self) -> float:
        return self.block1.theta


# -- joint-register kernels ----------------------------------------------

def _blocks(amps: np.ndarray, N: int) -> np.ndarray:
    return np.asarray(amps, dtype=complex).reshape(N, N)


def local_oracles(amps: np.ndarray, problem: CqsProblem) -> np.ndarray:
    """``I_{y1} (x) I_{y2}`` on a joint amplitude vector."""
    m = _blocks(amps, problem.N)
    m = phase_flip(m, problem.y1, axis=0)
    m = phase_flip(m, problem.y2, axis=1)
    return m.reshape(-1)


def global_oracle(amps: np.ndarray, problem: CqsProblem) -> np.ndarray:
    """``I_Y`` on a joint amplitude vector."""
    return phase_flip(np.asarray(amps).reshape(-1), problem.Y)


def _block_grover_steps(m: np.ndarray, problem: CqsProblem, ledger: QueryLedger) -> np.ndarray:
    # G (x) G = (G (x) I)(I (x) G); each factor is a sweep along one block axis.
    for axis, y in ((0, problem.y1), (1, problem.y2)):
        m = phase_flip(m, y, axis=axis)
        ledger.local_oracle_calls += 1
        m = invert_about_mean(m, axis=axis)
        ledger.diffusion_calls += 1
    return m


# -- operations ------------------------------------------------------------

def symmetry_witness(problem: CqsProblem) -> tuple[int, bool]:
    """A basis state ``|y1>|x>`` (x != y2) on which the local and global oracles differ.

    Returns the joint index and whether the two oracles act differently on it.
    """
    x = (problem.y2 + 1) % problem.N
    idx = problem.y1 * problem.N + x
    e = np.zeros(problem.dim, dtype=complex)
    e[idx] = 1.0
    differs = not np.array_equal(local_oracles(e, problem), global_oracle(e, problem))
    return idx, differs


def verify_symmetry_matching(problem: CqsProblem) -> bool:
    """Check ``(I_{y1} (x) I_{y2})|Y> = -I_Y|Y>`` while ``I_{y1} (x) I_{y2} != I_Y``."""
    check_statevector_dim(problem.dim)
    target = new_basis_state(problem.dim, problem.Y).amps
    lhs = local_oracles(target, problem)
    rhs = -global_oracle(target, problem)
    matches = bool(np.abs(lhs - rhs).max() <= 1e-14)
    _, differs = symmetry_witness(problem)
    return matches and differs


def cqs_run(problem: CqsProblem, k: int) -> tuple[StateVector, QueryLedger]:
    """``I_Y (G (x) G)^k`` applied to the uniform product state, on the full register."""
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    check_statevector_dim(problem.dim)
    ledger = QueryLedger()
    u = uniform_superposition(problem.block1)
    joint = tensor(u, u)
    m = _blocks(joint.amps, problem.N)
    for _ in range(k):
        m = _block_grover_steps(m, problem, ledger)
        StateVector(m.reshape(-1))  # norm check
    out = StateVector(global_oracle(m, problem))
    ledger.global_oracle_calls += 1
    return out, ledger


def cqs_run_factored(
    problem: CqsProblem, k: int, ledger: QueryLedger | None = None
) -> tuple[StateVector, StateVector, float]:
    """Evolve each block on its own and return ``(block1, block2, marked_amp)``.

    ``marked_amp`` is the product of the two marked amplitudes, i.e. the
    joint amplitude on ``Y`` before the global reflection; its square is the
    success probability with or without ``I_Y``.
    """
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    if ledger is None:
        ledger = QueryLedger()
    b1 = grover_run(problem.block1, k, ledger)
    b2 = grover_run(problem.block2, k, ledger)
    marked_amp = (b1[problem.y1] * b2[problem.y2]).real
    return b1, b2, float(marked_amp)


def success_probability(state: StateVector, target: int) -> float:
    target = check_index(target, state.dim)
    return float(abs(state[target]) ** 2)


def full_space_grover_baseline(problem: CqsProblem, k: int) -> tuple[StateVector, QueryLedger]:
    """Plain Grover over all ``N^2`` joint items with the global oracle only."""
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    check_statevector_dim(problem.dim)
    ledger = QueryLedger()
    amps = uniform_superposition(SearchSpace(2 * problem.n, problem.Y)).amps
    for _ in range(k):
        amps = phase_flip(amps, problem.Y)
        ledger.global_oracle_calls += 1
        amps = invert_about_mean(amps)
        ledger.diffusion_calls += 1
    return StateVector(amps), ledger


# -- diagnostics -----------------------------------------------------------

def sector_amplitudes(state: StateVector, problem: CqsProblem) -> tuple[float, float, float, float]:
    """Overlaps with ``|ybar ybar>, |ybar y2>, |y1 ybar>, |Y>``.

    ``|ybar>`` is the normalized uniform superposition of a block's unmarked
    items.  For the CQS output these are ``cos^2, sin*cos, sin*cos, -sin^2``
    of ``theta_k``.
    """
    N, y1, y2 = problem.N, problem.y1, problem.y2
    m = _blocks(state.amps, N)
    rows = np.ones(N, dtype=bool)
    rows[y1] = False
    cols = np.ones(N, dtype=bool)
    cols[y2] = False
    s = math.sqrt(N - 1)
    bb = m[np.ix_(rows, cols)].sum() / (N - 1)
    by = m[rows, y2].sum() / s
    yb = m[y1, cols].sum() / s
    yy = m[y1, y2]
    return tuple(float(c.real) for c in (bb, by, yb, yy))


def schmidt_coefficients(state: StateVector, N: int) -> np.ndarray:
    """Singular values of the ``N x N`` amplitude matrix across the block cut."""
    return np.linalg.svd(_blocks(state.amps, N), compute_uv=False)


def analytic_sectors(problem: CqsProblem, k: int) -> tuple[float, float, float, float]:
    t = problem.block1.theta_k(k)
    c, s = math.cos(t), math.sin(t)
    return c * c, s * c, s * c, -s * s


def analytic_success(problem: CqsProblem, k: int) -> float:
    """``sin^4(theta_k)``: the product of two single-block success probabilities."""
    return analytic_state(problem.block1, k)[1] ** 4


# -- query scaling ---------------------------------------------------------

@dataclass(frozen=True)
class SpeedupRow:
    n: int
    N: int
    k_cqs: int
    local_queries: int
    global_queries: int
    p_cqs: float
    k_full: int | None
    p_full: float | None

    @property
    def cqs_queries(self) -> int:
        return self.local_queries + self.global_queries

    @property
    def query_ratio(self) -> float | None:
        """Baseline oracle calls per CQS oracle call."""
        if self.k_full is None:
            return None
        return self.k_full / self.cqs_queries

    @property
    def degenerate(self) -> bool:
        # n=1 is dominated by rounding; kept in tables, left out of fits.
        return self.n < 2


def speedup_report(n_range) -> list[SpeedupRow]:
    ns = list(n_range)
    if not ns:
        raise ValueError("empty n range")
    rows = []
    for n in ns:
        problem = CqsProblem.all_ones(n)
        k_cqs = optimal_iterations(problem.block1)
        ledger = QueryLedger()
        _, _, amp = cqs_run_factored(problem, k_cqs, ledger)
        ledger.global_oracle_calls += 1
        k_full = p_full = None
        if 2 * n <= BASELINE_MAX_QUBITS:
            k_full = optimal_iterations(SearchSpace(2 * n, problem.Y))
            state, _ = full_space_grover_baseline(problem, k_full)
            p_full = success_probability(state, problem.Y)
        rows.append(
            SpeedupRow(
                n=n,
                N=problem.N,
                k_cqs=k_cqs,
                local_queries=ledger.local_oracle_calls,
                global_queries=ledger.global_oracle_calls,
                p_cqs=amp * amp,
                k_full=k_full,
                p_full=p_full,
            )
        )
    return rows


def fit_slope(x, y) -> float:
    """Least-squares slope of ``y`` against ``x`` (with intercept)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
