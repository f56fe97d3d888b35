import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_channel
from mimoprec.errors import DomainError, SingularChannelError
from mimoprec.precoders import (PrecoderKind, build_mf, build_precoder,
                                build_rzf, build_wiener,
                                build_zf_max_throughput, build_zf_min_power,
                                water_fill)
from oracles import water_fill_bisection, water_fill_cvx

DIAG12 = np.diag([1.0, 2.0])


# -- ZF, minimum power ---------------------------------------------------------

def test_zf_min_power_identity():
    out = build_zf_min_power(np.eye(2), 10.0)
    assert np.isclose(out.beta, np.sqrt(5.0))
    assert np.allclose(out.matrix, np.sqrt(5.0) * np.eye(2))


def test_zf_min_power_diagonal():
    out = build_zf_min_power(DIAG12, 10.0)
    assert np.isclose(out.beta, np.sqrt(8.0))
    assert np.allclose(out.matrix, np.sqrt(8.0) * np.diag([1.0, 0.5]))


def test_zf_min_power_residual_2x4(rng):
    h = random_channel(rng, 4, 2)
    out = build_zf_min_power(h, 3.0)
    assert np.linalg.norm(h @ out.matrix - out.beta * np.eye(2)) \
        < 1e-9 * out.beta
    # the whole budget is spent
    assert np.isclose(np.trace(out.matrix @ out.matrix.conj().T).real, 3.0)


def test_zf_rejects_singular_gram():
    h = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularChannelError) as exc:
        build_zf_min_power(h, 1.0)
    assert "cond_1" in exc.value.diagnostics
    with pytest.raises(SingularChannelError):
        build_zf_max_throughput(h, 1.0)


# -- ZF, maximum throughput ----------------------------------------------------

def test_zf_max_throughput_diagonal():
    out = build_zf_max_throughput(DIAG12, 10.0)
    assert np.allclose(out.powers, [4.625, 21.5])
    assert np.isclose(out.powers @ [1.0, 0.25], 10.0)
    assert np.allclose(DIAG12 @ out.matrix, np.diag(np.sqrt([4.625, 21.5])))


def test_water_fill_level_diagonal():
    p, mu = water_fill([1.0, 0.25], 10.0)
    assert np.isclose(mu, 5.625)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zf_max_throughput_identity_is_uniform(n):
    out = build_zf_max_throughput(np.eye(n), 7.0)
    assert np.allclose(out.powers, 7.0 / n)


def test_zf_max_throughput_deactivates_expensive_stream():
    # c = [1, 0.01]: only the cheap stream is worth powering at rho = 0.1
    out = build_zf_max_throughput(np.diag([1.0, 10.0]), 0.1)
    assert np.allclose(out.powers, [0.0, 10.0])
    assert np.all(out.powers >= 0)
    assert np.isclose(out.powers @ [1.0, 0.01], 0.1)


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6),
       st.floats(1e-3, 1e4))
def test_water_fill_matches_bisection_oracle(w, budget):
    p, _ = water_fill(w, budget)
    ref, _ = water_fill_bisection(w, budget)
    assert np.all(p >= 0)
    assert np.dot(p, w) <= budget * (1 + 1e-9)
    assert np.allclose(p, ref, rtol=1e-7, atol=1e-9 * (1 + ref.max()))
    if np.all(p > 0):
        assert np.isclose(np.dot(p, w), budget, rtol=1e-9)


@pytest.mark.parametrize("w,budget", [([1.0, 0.25], 10.0),
                                      ([1.0, 0.01], 0.1),
                                      ([0.3, 2.0, 5.0], 1.0)])
def test_water_fill_matches_convex_solver(w, budget):
    p, _ = water_fill(w, budget)
    # interior-point accuracy, not an exact solve
    assert np.allclose(p, water_fill_cvx(w, budget), rtol=1e-3, atol=1e-3)


def test_water_fill_rejects_nonpositive_weights():
    with pytest.raises(DomainError):
        water_fill([1.0, 0.0], 1.0)


# -- RZF / MF / Wiener ---------------------------------------------------------

def test_rzf_identity():
    out = build_rzf(np.eye(2), 1.0)
    assert np.isclose(out.eta, 0.5) and np.isclose(out.beta, np.sqrt(2))
    assert np.allclose(out.matrix, np.sqrt(2) / 2 * np.eye(2))


def test_rzf_diagonal():
    out = build_rzf(DIAG12, 1.0)
    assert np.isclose(out.eta, 0.41)
    assert np.isclose(out.beta, 1 / np.sqrt(0.41))


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_rzf_rejects_nonpositive_c(c):
    with pytest.raises(DomainError):
        build_rzf(np.eye(2), c)


def test_mf_examples():
    assert np.isclose(build_mf(np.eye(2)).beta, 1 / np.sqrt(2))
    out = build_mf(DIAG12)
    assert np.isclose(out.beta, 1 / np.sqrt(5)) and np.isclose(out.eta, 5)
    with pytest.raises(DomainError):
        build_mf(np.zeros((2, 2)))


def test_wiener_identity():
    out = build_wiener(np.eye(2), 2.0)
    assert np.isclose(out.eta, 0.5) and np.isclose(out.beta, np.sqrt(2))


def test_wiener_push_through_matches_transmit_side_inverse(rng):
    h = random_channel(rng, 4, 2)
    rho = 5.0
    out = build_wiener(h, rho)
    f = h.conj().T @ h + (2 / rho) * np.eye(4)
    direct = np.linalg.solve(f, h.conj().T)
    eta = np.trace(np.linalg.inv(f) @ np.linalg.inv(f) @ h.conj().T @ h).real
    assert np.isclose(out.eta, eta, rtol=1e-10)
    assert np.allclose(out.matrix, direct / np.sqrt(eta), atol=1e-10)


def test_wiener_is_rzf_with_shift(rng):
    h = random_channel(rng, 3, 3)
    rho = 12.5
    w = build_wiener(h, rho)
    r = build_rzf(h, 3 / rho)
    assert np.allclose(w.matrix, r.matrix, rtol=0, atol=1e-12)
    assert w.beta == r.beta


def test_rzf_small_c_approaches_zf_direction(rng):
    h = random_channel(rng, 3, 2)
    zf = h.conj().T @ np.linalg.inv(h @ h.conj().T)
    p = build_rzf(h, 1e-8).matrix
    cos = abs(np.vdot(zf, p)) / (np.linalg.norm(zf) * np.linalg.norm(p))
    assert 1 - cos < 1e-12


@given(st.integers(1, 4), st.integers(0, 2), st.floats(0.01, 1e4),
       st.integers(0, 2**31))
def test_unit_trace_designs(n, extra, rho, seed):
    h = random_channel(np.random.default_rng(seed), n + extra, n)
    for kind in (PrecoderKind.RZF, PrecoderKind.MF, PrecoderKind.WIENER):
        out = build_precoder(kind, h, rho)
        assert np.isclose(out.beta ** 2 * out.eta, 1.0, rtol=1e-12)
        tr = np.trace(out.matrix @ out.matrix.conj().T).real
        assert np.isclose(tr, 1.0, rtol=1e-10)


@given(st.integers(1, 4), st.integers(0, 2), st.floats(0.01, 1e4),
       st.integers(0, 2**31))
def test_zf_designs_decouple_streams(n, extra, rho, seed):
    h = random_channel(np.random.default_rng(seed), n + extra, n)
    lo = build_zf_min_power(h, rho)
    assert np.allclose(h @ lo.matrix, lo.beta * np.eye(n),
                       atol=1e-9 * lo.beta)
    hi = build_zf_max_throughput(h, rho)
    assert np.allclose(h @ hi.matrix, np.diag(np.sqrt(hi.powers)),
                       atol=1e-9 * np.sqrt(hi.powers.max()))
    c = np.diag(np.linalg.inv(h @ h.conj().T)).real
    assert hi.powers @ c <= rho * (1 + 1e-9)


def test_constructions_are_deterministic(rng):
    h = random_channel(rng, 3, 2)
    for kind in PrecoderKind:
        a = build_precoder(kind, h, 4.0)
        b = build_precoder(kind, h.copy(), 4.0)
        assert np.array_equal(a.matrix, b.matrix)


def test_default_rzf_regularization_is_n(rng):
    h = random_channel(rng, 3, 3)
    assert np.array_equal(build_precoder("rzf", h, 1.0).matrix,
                          build_rzf(h, 3).matrix)
