import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasecov.qubit import (BlochVector, DivergenceError, InvalidStateError, QubitState,
                            binary_entropy, bloch_from_state, l1_coherence, purity,
                            rel_entropy_coherence, rel_entropy_to, state_from_bloch,
                            trace_distance, von_neumann_entropy)

LN2 = math.log(2.0)


@st.composite
def states(draw, full_rank=False):
    p1 = draw(st.floats(0.0, 1.0))
    cap = math.sqrt(p1 * (1.0 - p1))
    r = draw(st.floats(0.0, 0.999 if full_rank else 1.0)) * cap
    phi = draw(st.floats(0.0, 2.0 * math.pi))
    if full_rank:
        p1 = min(max(p1, 1e-3), 1.0 - 1e-3)
        r = min(r, 0.999 * math.sqrt(p1 * (1.0 - p1)))
    return QubitState(p1, r * complex(math.cos(phi), math.sin(phi)))


def test_rejects_invalid_states():
    with pytest.raises(InvalidStateError):
        QubitState(1.5)
    with pytest.raises(InvalidStateError):
        QubitState(0.5, 0.6)
    with pytest.raises(InvalidStateError):
        QubitState(float("nan"))


def test_clamps_round_off():
    s = QubitState(-1e-13, 0j)
    assert s.p1 == 0.0
    s = QubitState(0.5, 0.5 + 1e-14)
    assert abs(s.alpha) <= 0.5


def test_matrix_layout():
    m = QubitState(0.25, 0.1 - 0.2j).matrix()
    assert m[0, 0] == 0.75 and m[1, 1] == 0.25
    assert m[0, 1] == 0.1 - 0.2j and m[1, 0] == 0.1 + 0.2j


@pytest.mark.parametrize("p1, alpha, r", [
    (0.5, 0j, (0.0, 0.0, 0.0)),
    (0.0, 0j, (0.0, 0.0, 1.0)),
    (0.5, 0.5 + 0j, (1.0, 0.0, 0.0)),
])
def test_bloch_examples(p1, alpha, r):
    b = bloch_from_state(QubitState(p1, alpha))
    assert (b.rx, b.ry, b.rz) == pytest.approx(r, abs=1e-15)


def test_bloch_norm_bound():
    with pytest.raises(InvalidStateError):
        BlochVector(1.0, 0.1, 0.0)


def test_bloch_round_trip_1000_states():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p1 = rng.uniform()
        a = rng.uniform() * math.sqrt(p1 * (1 - p1)) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        s = QubitState(p1, a)
        back = state_from_bloch(bloch_from_state(s))
        assert abs(back.p1 - s.p1) <= 1e-14
        assert abs(back.alpha - s.alpha) <= 1e-14


@pytest.mark.parametrize("p1, alpha, expected", [
    (0.5, 0j, LN2),
    (0.0, 0j, 0.0),
    (0.5, 0.25, -0.75 * math.log(0.75) - 0.25 * math.log(0.25)),
])
def test_entropy_examples(p1, alpha, expected):
    assert von_neumann_entropy(QubitState(p1, alpha)) == pytest.approx(expected, abs=1e-15)


def test_entropy_example_value():
    assert von_neumann_entropy(QubitState(0.5, 0.25)) == pytest.approx(0.5623, abs=1e-4)


@pytest.mark.parametrize("p1, expected", [(0.5, 0.5), (0.0, 1.0), (0.25, 0.625)])
def test_purity_examples(p1, expected):
    assert purity(QubitState(p1)) == pytest.approx(expected, abs=1e-15)


def test_trace_distance_examples():
    a = QubitState(0.0)
    assert trace_distance(a, a) == 0.0
    assert trace_distance(a, QubitState(1.0)) == pytest.approx(1.0)
    assert trace_distance(a, QubitState.plus()) == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_trace_distance_matches_matrix_definition():
    rng = np.random.default_rng(3)
    for _ in range(200):
        ss = []
        for _ in range(2):
            p1 = rng.uniform()
            a = rng.uniform() * math.sqrt(p1 * (1 - p1)) * np.exp(1j * rng.uniform(0, 6.3))
            ss.append(QubitState(p1, a))
        diff = ss[0].matrix() - ss[1].matrix()
        ref = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)))
        assert trace_distance(*ss) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("p1, alpha, expected", [(0.3, 0j, 0.0), (0.5, 0.5, 1.0), (0.5, 0.3, 0.6)])
def test_l1_examples(p1, alpha, expected):
    assert l1_coherence(QubitState(p1, alpha)) == pytest.approx(expected)


@pytest.mark.parametrize("p1, alpha, expected", [
    (0.3, 0j, 0.0),
    (0.5, 0.5, LN2),
    (0.5, 0.25, LN2 - (-0.75 * math.log(0.75) - 0.25 * math.log(0.25))),
])
def test_rec_examples(p1, alpha, expected):
    assert rel_entropy_coherence(QubitState(p1, alpha)) == pytest.approx(expected, abs=1e-14)


def test_rec_example_value():
    assert rel_entropy_coherence(QubitState(0.5, 0.25)) == pytest.approx(0.1308, abs=1e-4)


def test_rel_entropy_examples():
    mixed = QubitState.maximally_mixed()
    assert rel_entropy_to(mixed, mixed) == pytest.approx(0.0, abs=1e-15)
    assert rel_entropy_to(QubitState(0.0), mixed) == pytest.approx(LN2, abs=1e-15)
    assert rel_entropy_to(QubitState(1 / 3), QubitState(2 / 3)) == pytest.approx(LN2 / 3, abs=1e-14)
    assert rel_entropy_to(QubitState(1 / 3), QubitState(2 / 3)) == pytest.approx(0.2310, abs=1e-4)


def test_rel_entropy_rank_deficient_reference():
    with pytest.raises(DivergenceError):
        rel_entropy_to(QubitState(0.5), QubitState(0.0))
    with pytest.raises(DivergenceError):
        rel_entropy_to(QubitState(0.5), QubitState.plus())


@given(states())
def test_quantifier_ranges(s):
    S = von_neumann_entropy(s)
    P = purity(s)
    assert -1e-15 <= S <= LN2 + 1e-15
    assert 0.5 - 1e-15 <= P <= 1.0 + 1e-15
    assert 0.0 <= l1_coherence(s) <= 1.0 + 1e-12
    assert rel_entropy_coherence(s) >= 0.0
    assert rel_entropy_coherence(s) == pytest.approx(binary_entropy(s.p1) - S, abs=1e-12)
    assert bloch_from_state(s).norm() <= 1.0 + 1e-12


@given(states())
def test_purity_entropy_limits(s):
    P, S = purity(s), von_neumann_entropy(s)
    if abs(P - 1.0) < 1e-12:
        assert S < 1e-4
    if abs(P - 0.5) < 1e-14:
        assert S == pytest.approx(LN2, abs=1e-6)


def test_pure_and_mixed_limits_exact():
    for s in (QubitState(0.0), QubitState(1.0), QubitState.plus(), QubitState(0.5, 0.5j)):
        assert purity(s) == pytest.approx(1.0)
        assert von_neumann_entropy(s) == pytest.approx(0.0, abs=1e-15)
    mixed = QubitState.maximally_mixed()
    assert purity(mixed) == 0.5 and von_neumann_entropy(mixed) == pytest.approx(LN2)


@given(states(), states(), states())
def test_trace_distance_is_a_metric(a, b, c):
    dab, dba = trace_distance(a, b), trace_distance(b, a)
    assert dab == dba
    assert 0.0 <= dab <= 1.0 + 1e-12
    assert trace_distance(a, c) <= dab + trace_distance(b, c) + 1e-12


@settings(max_examples=200)
@given(states(full_rank=True), states(full_rank=True))
def test_relative_entropy_nonnegative(s, ref):
    d = rel_entropy_to(s, ref)
    assert d >= 0.0
    assert rel_entropy_to(ref, ref) <= 1e-10
    if d <= 1e-10:
        assert trace_distance(s, ref) < 1e-4
