import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqsearch.cqs import CqsProblem, cqs_run
from cqsearch.grover import optimal_iterations
from cqsearch.noise import (
    InvalidChannelError,
    MadChannel,
    PseudoPureConfig,
    apply_kraus,
    apply_mad,
    build_kraus,
    choi_matrix,
    mad_closed_form,
    mad_success_probability,
    pseudo_pure_evolve,
    pseudo_pure_exact,
    pseudo_pure_init,
    pseudo_pure_probability,
    random_channel,
    random_invalid_channel,
    uniform_decay_channel,
    validate_cptp,
)
from cqsearch.qstate import DensityMatrix, projector_probability

from oracles import cqs_unitary, kraus_apply, kraus_operators, random_density, uniform


# -- pseudo-pure -----------------------------------------------------------

def test_pseudo_pure_init_examples():
    p = CqsProblem.all_ones(1)
    pure = pseudo_pure_init(PseudoPureConfig(1.0, p)).entries
    assert np.abs(pure - np.full((4, 4), 0.25)).max() < 1e-15
    mixed = pseudo_pure_init(PseudoPureConfig(0.0, p)).entries
    assert np.abs(mixed - np.eye(4) / 4).max() < 1e-15
    half = pseudo_pure_init(PseudoPureConfig(0.5, p)).entries
    assert np.abs(np.diag(half) - 0.25).max() < 1e-15
    assert np.abs(half[~np.eye(4, dtype=bool)] - 0.125).max() < 1e-15


def test_pseudo_pure_config_range():
    with pytest.raises(ValueError):
        PseudoPureConfig(1.5, CqsProblem.all_ones(1))


def test_pseudo_pure_evolve_examples():
    p = CqsProblem.all_ones(2)
    rho = pseudo_pure_evolve(pseudo_pure_init(PseudoPureConfig(0.0, p)), p, 3)
    assert np.abs(rho.entries - np.eye(16) / 16).max() < 1e-15
    for k in range(4):
        rho = pseudo_pure_evolve(pseudo_pure_init(PseudoPureConfig(1.0, p)), p, k)
        state, _ = cqs_run(p, k)
        assert np.abs(rho.entries - np.outer(state.amps, state.amps.conj())).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 7), st.floats(0, 1), st.data())
def test_pseudo_pure_evolve_matches_dense_conjugation(n, k, eps, data):
    N = 2**n
    p = CqsProblem(n, data.draw(st.integers(0, N - 1)), data.draw(st.integers(0, N - 1)))
    rho0 = pseudo_pure_init(PseudoPureConfig(eps, p))
    U = cqs_unitary(N, p.y1, p.y2, k)
    dense = U @ rho0.entries @ U.conj().T
    assert np.abs(pseudo_pure_evolve(rho0, p, k).entries - dense).max() < 1e-10


def test_pseudo_pure_probability_examples():
    p = CqsProblem.all_ones(2)
    sim, paper = pseudo_pure_probability(PseudoPureConfig(1.0, p), 1)
    assert abs(sim - 1) < 1e-12 and abs(paper - 1) < 1e-12
    sim, paper = pseudo_pure_probability(PseudoPureConfig(0.0, p), 1)
    assert abs(sim - 1 / 16) < 1e-12 and paper == 1.0
    sim, paper = pseudo_pure_probability(PseudoPureConfig(0.5, p), 1)
    assert abs(sim - 0.53125) < 1e-12 and abs(paper - 1.0) < 1e-12


def test_pseudo_pure_exact_formula():
    for n in (1, 2, 3):
        p = CqsProblem.all_ones(n)
        for eps in (0, 0.25, 0.5, 0.75, 1):
            for k in range(5):
                cfg = PseudoPureConfig(eps, p)
                sim, _ = pseudo_pure_probability(cfg, k)
                assert abs(sim - pseudo_pure_exact(cfg, k)) <= 1e-10


# -- MAD channel -----------------------------------------------------------

def test_channel_structure():
    ch = MadChannel.from_rates(3, {(1, 0): 0.2, (2, 0): 0.1, (2, 1): 0.3})
    assert np.allclose(ch.kappa, [0, 0.2, 0.4])
    with pytest.raises(ValueError, match="higher level"):
        MadChannel(2, np.array([[0, 0.1], [0, 0]]))
    with pytest.raises(ValueError):
        MadChannel.from_rates(3, {(0, 1): 0.1})


def test_build_kraus_examples():
    ops = build_kraus(MadChannel.from_rates(2, {(1, 0): 0.3})).operators
    assert len(ops) == 2
    assert np.allclose(ops[0], np.diag([1, math.sqrt(0.7)]))
    assert np.allclose(ops[1], [[0, math.sqrt(0.3)], [0, 0]])

    ops = build_kraus(MadChannel.from_rates(4)).operators
    assert len(ops) == 1 and np.array_equal(ops[0], np.eye(4))

    ch = MadChannel.from_rates(3, {(1, 0): 0.2, (2, 0): 0.1, (2, 1): 0.3})
    k = build_kraus(ch)
    assert np.abs(k.operators[0] - np.diag([1, math.sqrt(0.8), math.sqrt(0.6)])).max() < 1e-15
    assert len(k.operators) == 4 and k.completeness_error() < 1e-12

    with pytest.raises(InvalidChannelError, match="kappa"):
        build_kraus(MadChannel.from_rates(3, {(2, 0): 0.6, (2, 1): 0.6}))


def test_validate_cptp_examples():
    assert validate_cptp(MadChannel.from_rates(3, {(1, 0): 0.7, (2, 1): 0.7})).passed
    bad = validate_cptp(MadChannel.from_rates(3, {(2, 0): 0.6, (2, 1): 0.6}))
    assert not bad.passed and bad.violations == ["kappa[2]=1.2 exceeds 1"]
    full = validate_cptp(MadChannel.from_rates(2, {(1, 0): 1.0}))
    assert full.passed and full.choi_min_eigenvalue >= -1e-10
    neg = validate_cptp(MadChannel.from_rates(3, {(1, 0): -0.1}))
    assert not neg.passed and "outside [0, 1]" in neg.violations[0]


def test_choi_matches_kraus_vectorization():
    rng = np.random.default_rng(5)
    ch = random_channel(5, rng)
    ops = kraus_operators(ch.eta)
    d = ch.d
    dense = np.zeros((d * d, d * d), dtype=complex)
    for K in ops:
        # column-stacked |K>> with the input index first: sum_ij |i><j| (x) K|i><j|K^dag
        v = K.T.reshape(-1)
        dense += np.outer(v, v.conj())
    assert np.abs(choi_matrix(ch) - dense).max() < 1e-14


def test_apply_mad_examples():
    ch = MadChannel.from_rates(2, {(1, 0): 0.3})
    out = apply_mad(ch, DensityMatrix(np.diag([0, 1.0])))
    assert np.abs(out.entries - np.diag([0.3, 0.7])).max() < 1e-15

    plus = DensityMatrix(np.full((2, 2), 0.5))
    out = apply_mad(ch, plus).entries
    assert abs(out[0, 1] - 0.5 * math.sqrt(0.7)) < 1e-15

    rng = np.random.default_rng(2)
    ground = np.zeros((6, 6))
    ground[0, 0] = 1
    assert np.array_equal(apply_mad(random_channel(6, rng), DensityMatrix(ground)).entries, ground)


def test_apply_mad_errors():
    with pytest.raises(ValueError, match="does not match"):
        apply_mad(MadChannel.from_rates(2), DensityMatrix.maximally_mixed(4))
    with pytest.raises(InvalidChannelError):
        apply_mad(MadChannel.from_rates(3, {(2, 0): 0.6, (2, 1): 0.6}), DensityMatrix(np.eye(3) / 3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2**32 - 1))
def test_apply_mad_matches_kraus_sum(d, seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(d, rng)
    rho = random_density(d, rng)
    structured = apply_mad(ch, DensityMatrix(rho)).entries
    assert np.abs(structured - kraus_apply(kraus_operators(ch.eta), rho)).max() < 1e-12
    assert np.abs(structured - apply_kraus(build_kraus(ch), DensityMatrix(rho)).entries).max() < 1e-12
    assert abs(np.trace(structured) - 1) <= 1e-12
    out = DensityMatrix(structured)
    assert out.is_psd()
    # the top level only loses population
    assert structured[d - 1, d - 1].real <= rho[d - 1, d - 1].real + 1e-15


def test_top_level_population_equality_case():
    rng = np.random.default_rng(9)
    eta = random_channel(5, rng).eta.copy()
    eta[4, :] = 0
    rho = random_density(5, rng)
    out = apply_mad(MadChannel(5, eta), DensityMatrix(rho)).entries
    assert abs(out[4, 4] - rho[4, 4]) < 1e-15


def test_mad_success_probability_examples():
    p = CqsProblem.all_ones(2)
    k = optimal_iterations(p.block1)
    sim, closed, paper = mad_success_probability(MadChannel.from_rates(16), p, k)
    assert abs(sim - 1) < 1e-12 and abs(closed - 1) < 1e-12 and paper == 1

    ch = MadChannel.from_rates(16, {(15, 0): 0.15, (15, 3): 0.05})
    sim, closed, paper = mad_success_probability(ch, p, k)
    assert abs(sim - 0.8) < 1e-12 and abs(closed - 0.8) < 1e-12 and abs(paper - 0.8) < 1e-12

    # Y=5 at k=0; value frozen from the dense Kraus oracle
    p5 = CqsProblem(2, 1, 1)
    ch = MadChannel.from_rates(16, {(5, 0): 0.2, (9, 5): 0.06, (12, 5): 0.04})
    sim, closed, paper = mad_success_probability(ch, p5, 0)
    assert abs(sim - 0.05625) < 1e-12 and abs(closed - 0.05625) < 1e-12 and paper is None


def test_mad_success_matches_dense_kraus():
    rng = np.random.default_rng(11)
    for n in (1, 2, 3):
        p = CqsProblem(n, int(rng.integers(2**n)), int(rng.integers(2**n)))
        ch = random_channel(p.dim, rng)
        ops = kraus_operators(ch.eta) if p.dim <= 16 else None
        for k in range(int(4 * math.sqrt(p.N)) + 1):
            sim, closed, _ = mad_success_probability(ch, p, k)
            assert abs(sim - closed) <= 1e-10
            if ops is not None:
                psi = cqs_unitary(p.N, p.y1, p.y2, k) @ np.kron(uniform(p.N), uniform(p.N))
                dense = kraus_apply(ops, np.outer(psi, psi.conj()))[p.Y, p.Y].real
                assert abs(sim - dense) < 1e-12


def test_mad_dim_mismatch():
    with pytest.raises(ValueError):
        mad_success_probability(MadChannel.from_rates(4), CqsProblem.all_ones(2), 0)


def test_mad_closed_form_on_diagonal():
    ch = MadChannel.from_rates(4, {(3, 1): 0.5, (2, 1): 0.25, (1, 0): 0.1})
    diag = np.array([0.1, 0.2, 0.3, 0.4])
    assert mad_closed_form(ch, diag, 1) == pytest.approx(0.9 * 0.2 + 0.25 * 0.3 + 0.5 * 0.4)


def test_generators():
    ch = uniform_decay_channel(4, 0.2)
    assert np.allclose(ch.kappa, [0, 0.2, 0.2, 0.2])
    rng = np.random.default_rng(0)
    for d in range(1, 17):
        assert validate_cptp(random_channel(d, rng)).passed
    for d in range(3, 17):
        ch, j = random_invalid_channel(d, rng)
        report = validate_cptp(ch)
        assert not report.passed and any(v.startswith(f"kappa[{j}]=") for v in report.violations)
    with pytest.raises(ValueError):
        random_invalid_channel(2, rng)


def test_projector_on_channel_output_is_real():
    rng = np.random.default_rng(4)
    ch = random_channel(8, rng)
    out = apply_mad(ch, DensityMatrix(random_density(8, rng)))
    for t in range(8):
        assert 0 <= projector_probability(out, t) <= 1
