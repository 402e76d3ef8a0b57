"""Mixed-state search: pseudo-pure inputs and multi-level amplitude damping.

A multi-level amplitude-damping (MAD) channel on ``d`` levels is fixed by
decay rates ``eta[j, i]`` from level ``j`` down to level ``i < j``.  With
``kappa[j] = sum_i eta[j, i]`` it acts as

    D(rho) = K0 rho K0^dag + sum_{i<j} eta[j, i] <j|rho|j> |i><i|,
    K0 = diag(1, sqrt(1 - kappa[1]), ..., sqrt(1 - kappa[d-1])).

Only the diagonal receives the decay term, and off-diagonal ``rho[i, j]`` is
scaled by ``sqrt((1 - kappa[i]) (1 - kappa[j]))``; ``apply_mad`` uses that
structure directly rather than summing Kraus products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cqs import CqsProblem, analytic_success, cqs_run
from .grover import optimal_iterations, uniform_superposition
from .qstate import (
    DensityMatrix,
    check_density_dim,
    invert_about_mean,
    phase_flip,
    projector_probability,
    tensor,
)

COMPLETENESS_TOL = 1e-12
CHOI_TOL = 1e-10
CHOI_MAX_DIM = 32
# Above this the Kraus operators are not materialized; completeness is summed per level.
KRAUS_MAX_DIM = 64


class InvalidChannelError(ValueError):
    """Decay rates violate the range or total-decay constraints."""


# -- pseudo-pure search ----------------------------------------------------

@dataclass(frozen=True)
class PseudoPureConfig:
    epsilon: float
    problem: CqsProblem

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


def pseudo_pure_init(config: PseudoPureConfig) -> DensityMatrix:
    """``eps |Psi_0><Psi_0| + (1 - eps) I / N^2`` with ``Psi_0`` the uniform product state."""
    dim = config.problem.dim
    check_density_dim(dim)
    u = uniform_superposition(config.problem.block1)
    psi = tensor(u, u).amps
    eps = config.epsilon
    rho = eps * np.outer(psi, psi.conj()) + (1.0 - eps) * np.eye(dim) / dim
    return DensityMatrix(rho)


def pseudo_pure_evolve(rho: DensityMatrix, problem: CqsProblem, k: int) -> DensityMatrix:
    """Conjugate ``rho`` by ``I_Y (G (x) G)^k``.

    Every factor is real, so ``U rho U^dag`` is the kernel swept once over the
    row axes and once over the column axes.
    """
    if rho.dim != problem.dim:
        raise ValueError(f"density dim {rho.dim} does not match problem dim {problem.dim}")
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    N = problem.N
    t = rho.entries.reshape(N, N, N, N)  # (row block1, row block2, col block1, col block2)
    for _ in range(k):
        for axes, y in (((0, 2), problem.y1), ((1, 3), problem.y2)):
            for ax in axes:
                t = phase_flip(t, y, axis=ax)
            for ax in axes:
                t = invert_about_mean(t, axis=ax)
    m = t.reshape(problem.dim, problem.dim)
    m = phase_flip(phase_flip(m, problem.Y, axis=0), problem.Y, axis=1)
    return DensityMatrix(m)


def pseudo_pure_exact(config: PseudoPureConfig, k: int) -> float:
    """``(1 - eps)/N^2 + eps sin^4(theta_k)``: the measured probability of ``Y``."""
    p = config.problem
    return (1.0 - config.epsilon) / p.dim + config.epsilon * analytic_success(p, k)


def pseudo_pure_paper_formula(config: PseudoPureConfig, k: int) -> float:
    """``(1 - eps) + eps sin^4(theta_k)`` as published (no ``1/N^2`` on the mixed part)."""
    return (1.0 - config.epsilon) + config.epsilon * analytic_success(config.problem, k)


def pseudo_pure_probability(config: PseudoPureConfig, k: int) -> tuple[float, float]:
    """Return ``(simulated, paper_formula)`` for measuring ``Y`` after ``k`` steps."""
    rho = pseudo_pure_evolve(pseudo_pure_init(config), config.problem, k)
    return projector_probability(rho, config.problem.Y), pseudo_pure_paper_formula(config, k)


# -- MAD channel -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MadChannel:
    """Decay-rate table for a ``d``-level channel.

    ``eta[j, i]`` is the rate from level ``j`` to level ``i``; only ``j > i``
    may be nonzero.  Range and total-decay limits are not enforced here so
    that :func:`validate_cptp` can report them.
    """

    d: int
    eta: np.ndarray

    def __post_init__(self):
        d = int(self.d)
        if d < 1:
            raise ValueError(f"level count must be >= 1, got {d}")
        eta = np.array(self.eta, dtype=float)
        if eta.shape != (d, d):
            raise ValueError(f"rate table must have shape ({d}, {d}), got {eta.shape}")
        if np.any(np.triu(eta) != 0):
            raise ValueError("rates are only defined from a higher level to a lower one (j > i)")
        eta.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def from_rates(cls, d: int, rates: dict[tuple[int, int], float] | None = None) -> "MadChannel":
        """Build from ``{(j, i): rate}``."""
        eta = np.zeros((d, d))
        for (j, i), rate in (rates or {}).items():
            if not (0 <= i < j < d):
                raise ValueError(f"rate eta[{j}][{i}] needs 0 <= i < j < {d}")
            eta[j, i] = rate
        return cls(d, eta)

    @property
    def kappa(self) -> np.ndarray:
        """Total decay out of each level; ``kappa[0]`` is always 0."""
        return self.eta.sum(axis=1)

    def violations(self) -> list[str]:
        out = []
        for j, i in zip(*np.nonzero((self.eta < 0) | (self.eta > 1))):
            out.append(f"eta[{j}][{i}]={self.eta[j, i]:g} outside [0, 1]")
        kappa = self.kappa
        for j in np.nonzero(kappa > 1)[0]:
            out.append(f"kappa[{j}]={kappa[j]:g} exceeds 1")
        return out

    def check_valid(self) -> None:
        bad = self.violations()
        if bad:
            raise InvalidChannelError("; ".join(bad))


@dataclass(frozen=True)
class KrausSet:
    operators: list[np.ndarray]

    def completeness_error(self) -> float:
        """``max |sum K^dag K - I|``."""
        d = self.operators[0].shape[0]
        acc = sum(K.conj().T @ K for K in self.operators)
        return float(np.abs(acc - np.eye(d)).max())


@dataclass
class CptpReport:
    passed: bool
    violations: list[str] = field(default_factory=list)
    completeness_error: float | None = None
    choi_min_eigenvalue: float | None = None

    def __str__(self):
        if self.passed:
            return "pass"
        return "fail: " + "; ".join(self.violations)


def build_kraus(channel: MadChannel) -> KrausSet:
    """``K0`` followed by one ``sqrt(eta_ji)|i><j|`` per nonzero rate."""
    channel.check_valid()
    d = channel.d
    ops = [np.diag(np.sqrt(1.0 - channel.kappa)).astype(complex)]
    for j, i in zip(*np.nonzero(channel.eta)):
        K = np.zeros((d, d), dtype=complex)
        K[i, j] = math.sqrt(channel.eta[j, i])
        ops.append(K)
    return KrausSet(ops)


def _mad_map(channel: MadChannel, x: np.ndarray) -> np.ndarray:
    # Valid for any linear operator, not only density matrices.
    s = np.sqrt(1.0 - channel.kappa)
    out = s[:, None] * x * s[None, :]
    out[np.diag_indices(channel.d)] += channel.eta.T @ np.diagonal(x)
    return out


def choi_matrix(channel: MadChannel) -> np.ndarray:
    """``sum_ij |i><j| (x) D(|i><j|)``."""
    channel.check_valid()
    d = channel.d
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = _mad_map(channel, e)
    return choi


def validate_cptp(channel: MadChannel) -> CptpReport:
    violations = channel.violations()
    if violations:
        return CptpReport(False, violations)
    report = CptpReport(True)
    if channel.d <= KRAUS_MAX_DIM:
        report.completeness_error = build_kraus(channel).completeness_error()
    else:
        # sum K^dag K is diagonal: (1 - kappa_j) from K0 plus eta_ji from each K_ij
        diag = (1.0 - channel.kappa) + channel.eta.sum(axis=1)
        report.completeness_error = float(np.abs(diag - 1.0).max())
    if report.completeness_error > COMPLETENESS_TOL:
        report.violations.append(f"Kraus completeness error {report.completeness_error:.3g}")
    if channel.d <= CHOI_MAX_DIM:
        report.choi_min_eigenvalue = float(np.linalg.eigvalsh(choi_matrix(channel))[0])
        if report.choi_min_eigenvalue < -CHOI_TOL:
            report.violations.append(f"Choi matrix eigenvalue {report.choi_min_eigenvalue:.3g}")
    report.passed = not report.violations
    return report


def apply_mad(channel: MadChannel, rho: DensityMatrix) -> DensityMatrix:
    channel.check_valid()
    if rho.dim != channel.d:
        raise ValueError(f"density dim {rho.dim} does not match channel dim {channel.d}")
    return DensityMatrix(_mad_map(channel, rho.entries))


def apply_kraus(kraus: KrausSet, rho: DensityMatrix) -> DensityMatrix:
    """Plain Kraus sum ``sum K rho K^dag``."""
    return DensityMatrix(sum(K @ rho.entries @ K.conj().T for K in kraus.operators))


def mad_closed_form(channel: MadChannel, diagonal: np.ndarray, target: int) -> float:
    """``(1 - kappa_Y) rho_YY + sum_{J > Y} eta[J, Y] rho_JJ``."""
    diagonal = np.asarray(diagonal).real
    return float((1.0 - channel.kappa[target]) * diagonal[target]
                 + channel.eta[target + 1:, target] @ diagonal[target + 1:])


def mad_success_probability(
    channel: MadChannel, problem: CqsProblem, k: int
) -> tuple[float, float, float | None]:
    """Return ``(simulated, closed_form, paper_eq15)`` for the noisy CQS output.

    The channel acts once on the pure CQS output after ``k`` steps.
    ``paper_eq15`` is ``1 - kappa_Y`` (decay into ``Y`` read as zero) and is
    only given at the optimal iteration count; otherwise it is ``None``.
    """
    if channel.d != problem.dim:
        raise ValueError(f"channel dim {channel.d} does not match problem dim {problem.dim}")
    check_density_dim(problem.dim)
    state, _ = cqs_run(problem, k)
    rho = DensityMatrix.from_pure(state)
    simulated = projector_probability(apply_mad(channel, rho), problem.Y)
    closed = mad_closed_form(channel, np.abs(state.amps) ** 2, problem.Y)
    paper = None
    if k == optimal_iterations(problem.block1):
        paper = 1.0 - float(channel.kappa[problem.Y])
    return simulated, closed, paper


# -- channel generators ----------------------------------------------------

def uniform_decay_channel(d: int, gamma: float) -> MadChannel:
    """Every excited level decays straight to the ground state at rate ``gamma``."""
    eta = np.zeros((d, d))
    eta[1:, 0] = gamma
    return MadChannel(d, eta)


def random_channel(d: int, rng: np.random.Generator) -> MadChannel:
    """A valid channel: each level's total decay is uniform in [0, 1], split at random."""
    eta = np.zeros((d, d))
    for j in range(1, d):
        eta[j, :j] = rng.uniform() * rng.dirichlet(np.ones(j))
    return MadChannel(d, eta)


def random_invalid_channel(d: int, rng: np.random.Generator) -> tuple[MadChannel, int]:
    """A channel with every rate in [0, 1] but ``kappa[j] > 1`` at one level ``j``.

    Returns the channel and the offending level.  Needs ``d >= 3``.
    """
    if d < 3:
        raise ValueError("kappa can only exceed 1 without a rate exceeding 1 when d >= 3")
    base = random_channel(d, rng).eta.copy()
    j = int(rng.integers(2, d))
    base[j, :j] = rng.uniform(0.55, 1.0, size=j)
    return MadChannel(d, base), j
