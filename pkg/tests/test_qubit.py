import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpdephase.errors import DegeneracyError, DomainError, PositivityWarning
from gpdephase.qubit import BlochInitial, eigensystem, reduced_density

thetas = st.floats(0.0, math.pi)
factors = st.floats(0.0, 40.0)
times = st.floats(0.0, 100.0)


def test_theta_validation():
    with pytest.raises(DomainError):
        BlochInitial(-0.1)
    with pytest.raises(DomainError):
        BlochInitial(3.2)


def test_density_examples():
    assert np.allclose(reduced_density(BlochInitial(0.0), 0.3, 1.0).matrix, np.diag([1, 0]))
    assert np.allclose(reduced_density(BlochInitial(math.pi / 2), 0.0, 0.0).matrix, 0.5)
    assert np.allclose(reduced_density(BlochInitial(math.pi / 2), 800.0, 2.0).matrix, 0.5 * np.eye(2))


def test_coherence_phase_convention():
    rho = reduced_density(BlochInitial(math.pi / 2), 0.0, 0.25).matrix
    assert rho[1, 0] == pytest.approx(0.5 * np.exp(-0.25j))


@settings(max_examples=200, deadline=None)
@given(thetas, factors, times)
def test_density_invariants(theta, F, t):
    init = BlochInitial(theta)
    m = reduced_density(init, F, t).matrix
    assert np.allclose(m, m.conj().T, atol=0)
    assert abs(np.trace(m) - 1) < 1e-12
    w = np.linalg.eigvalsh(m)
    assert w.min() >= -1e-12 and w.max() <= 1 + 1e-12
    # populations do not depend on F or t
    assert m[0, 0].real == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-15)


def test_negative_factor_warns_but_returns():
    with pytest.warns(PositivityWarning):
        rho = reduced_density(BlochInitial(math.pi / 3), -0.5, 1.0)
    assert np.linalg.eigvalsh(rho.matrix).min() < 0


def test_eigensystem_examples():
    plus, minus = eigensystem(reduced_density(BlochInitial(0.0), 0.0, 0.0))
    assert (plus.eigenvalue, minus.eigenvalue) == (1.0, 0.0)
    assert np.allclose(plus.eigenvector, [1, 0]) and np.allclose(minus.eigenvector, [0, 1])
    plus, minus = eigensystem(reduced_density(BlochInitial(math.pi / 2), 0.0, 0.0))
    assert plus.eigenvalue == pytest.approx(1.0) and minus.eigenvalue == pytest.approx(0.0, abs=1e-15)
    th, F = math.pi / 3, 0.2
    root = math.sqrt(math.cos(th) ** 2 + math.exp(-2 * F) * math.sin(th) ** 2)
    plus, minus = eigensystem(reduced_density(BlochInitial(th), F, 1.3))
    assert plus.eigenvalue == pytest.approx(0.5 * (1 + root), abs=1e-15)
    assert minus.eigenvalue == pytest.approx(0.5 * (1 - root), abs=1e-15)


def test_degenerate_spectrum():
    rho = reduced_density(BlochInitial(math.pi / 2), 800.0, 2.0)
    with pytest.raises(DegeneracyError) as info:
        eigensystem(rho)
    assert info.value.time == 2.0


@settings(max_examples=300, deadline=None)
@given(thetas, factors, times)
def test_eigensystem_invariants(theta, F, t):
    rho = reduced_density(BlochInitial(theta), F, t)
    m = rho.matrix
    try:
        pairs = eigensystem(rho)
    except DegeneracyError:
        assert abs(np.linalg.eigvalsh(m).ptp()) < 1e-11
        return
    ref = np.linalg.eigvalsh(m)[::-1]
    recon = np.zeros((2, 2), dtype=complex)
    for pair, expected in zip(pairs, ref):
        v = pair.eigenvector
        assert np.linalg.norm(m @ v - pair.eigenvalue * v) <= 1e-12
        assert abs(np.linalg.norm(v) - 1) < 1e-14
        assert pair.eigenvalue == pytest.approx(expected, abs=1e-13)
        lead = v[0] if abs(v[0]) > 1e-15 else v[1]
        assert lead.imag == 0 and lead.real > 0
        recon += pair.eigenvalue * np.outer(v, v.conj())
    assert abs(np.vdot(pairs[0].eigenvector, pairs[1].eigenvector)) < 1e-14
    assert np.max(np.abs(recon - m)) <= 1e-12
    assert pairs[0].eigenvalue + pairs[1].eigenvalue == pytest.approx(1.0, abs=1e-12)
    assert pairs[0].eigenvalue * pairs[1].eigenvalue == pytest.approx(np.linalg.det(m).real, abs=1e-12)
    if F == 0:
        assert pairs[0].eigenvalue == pytest.approx(1.0, abs=1e-12)
