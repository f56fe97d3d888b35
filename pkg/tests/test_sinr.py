import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_channel
from mimoprec.equalizers import (EqualizerKind, build_mmse_equalizer,
                                 build_zf_equalizer)
from mimoprec.errors import (ConfigurationError, DomainError,
                             SingularChannelError)
from mimoprec.precoders import PrecoderKind, build_precoder
from mimoprec.sinr import (LinkConfig, link_sinr, mutual_info, sinr_mf,
                           sinr_mmse_composite, sinr_mmse_receiver,
                           sinr_precoded_mmse_eq, sinr_precoded_zf_eq, sinr_rzf, sinr_wiener,
                           sinr_zf_max_throughput, sinr_zf_min_power)
from oracles import literal_sinr, mmse_sinr_by_whitening

DIAG12 = np.diag([1.0, 2.0])

ALL_CONFIGS = [
    (PrecoderKind.ZF_MIN_POWER, EqualizerKind.NONE),
    (PrecoderKind.ZF_MAX_THROUGHPUT, EqualizerKind.NONE),
] + [(p, e) for p in (PrecoderKind.RZF, PrecoderKind.MF, PrecoderKind.WIENER)
     for e in EqualizerKind]


# -- closed-form examples --------------------------------------------------------

def test_zf_min_power_examples():
    assert np.allclose(sinr_zf_min_power(np.eye(2), 10.0), [5.0, 5.0])
    assert np.allclose(sinr_zf_min_power(DIAG12, 10.0), [8.0, 8.0])


def test_zf_max_throughput_examples():
    assert np.allclose(sinr_zf_max_throughput(DIAG12, 10.0), [4.625, 21.5])
    assert np.allclose(sinr_zf_max_throughput(np.eye(2), 10.0), [5.0, 5.0])


def test_zf_max_throughput_beats_min_power(rng):
    for _ in range(1000):
        h = random_channel(rng, 2, 2)
        rho = 10 ** rng.uniform(-1, 3)
        assert mutual_info(sinr_zf_max_throughput(h, rho)) >= \
            mutual_info(sinr_zf_min_power(h, rho)) - 1e-12


def test_zf_singular_channel_signals():
    with pytest.raises(SingularChannelError):
        sinr_zf_min_power(np.ones((2, 2)), 1.0)
    with pytest.raises(SingularChannelError):
        sinr_precoded_zf_eq(np.ones((2, 2)), 1.0, "mf")


def test_rzf_diagonal_example():
    g = sinr_rzf(DIAG12, 10.0, 1.0)
    assert np.allclose(g, [10 / (2 * 0.41) * 0.25, 10 / (2 * 0.41) * 0.64])
    assert np.allclose(g, [3.0487804878, 7.8048780488])


def test_mf_diagonal_example():
    assert np.allclose(sinr_mf(DIAG12, 10.0), [1.0, 16.0])


def test_wiener_identity_example():
    assert np.allclose(sinr_wiener(np.eye(2), 2.0), [0.5, 0.5])


def test_wiener_identity_high_snr_limit():
    rho = 1e9
    assert np.allclose(sinr_wiener(np.eye(3), rho), rho / 9, rtol=1e-6)


def test_zf_equalizer_examples():
    assert np.allclose(sinr_precoded_zf_eq(np.eye(2), 2.0, "wiener"), 0.5)
    assert np.allclose(sinr_precoded_zf_eq(DIAG12, 10.0, "mf"), [1.0, 16.0])


def test_mmse_equalizer_mf_identity():
    assert np.allclose(sinr_precoded_mmse_eq(np.eye(2), 8.0, "mf"), 2.0)


def test_mmse_equalizer_zero_composite():
    assert np.array_equal(sinr_mmse_composite(np.zeros((2, 2)), 5.0),
                          [0.0, 0.0])
    with pytest.raises(DomainError):
        sinr_precoded_mmse_eq(np.zeros((2, 2)), 5.0, "rzf")


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
def test_identity_channel_cross_family(n, rho):
    h, want = np.eye(n), rho / n ** 2
    for g in (sinr_rzf(h, rho, 0.7), sinr_mf(h, rho),
              sinr_precoded_zf_eq(h, rho, "mf"),
              sinr_precoded_mmse_eq(h, rho, "mf")):
        assert np.allclose(g, want, rtol=1e-12, atol=0)


# -- independent algebraic paths -------------------------------------------------

@pytest.mark.parametrize("kind", ["rzf", "mf", "wiener"])
def test_mmse_equalizer_matches_whitened_filter(kind, rng):
    for m, n in [(2, 2), (3, 2), (4, 3)]:
        h = random_channel(rng, m, n)
        rho = 7.0
        comp = h @ build_precoder(kind, h, rho).matrix
        want = mmse_sinr_by_whitening(comp, rho / n)
        assert np.allclose(sinr_precoded_mmse_eq(h, rho, kind), want,
                           rtol=1e-9)


def test_wiener_mmse_duality_square(rng):
    for n in (2, 3, 4):
        for _ in range(20):
            h = random_channel(rng, n, n)
            rho = 10 ** rng.uniform(-1, 3)
            a = sinr_wiener(h, rho)
            b = sinr_mmse_receiver(h.T, rho)
            assert np.allclose(a, b, rtol=1e-9, atol=0)


def test_wiener_mmse_duality_non_square_is_reported(rng, capsys):
    # for M > N the two composites have different sizes; record the gap
    h = random_channel(rng, 3, 2)
    a = np.sort(sinr_wiener(h, 10.0))
    b = np.sort(sinr_mmse_receiver(h.T, 10.0))
    gap = float(np.max(np.abs(a - b) / b))
    print(f"non-square duality gap (3x2): {gap:.3e}")
    assert np.all(np.isfinite(gap))


def test_eigen_forms_match_matrix_forms(rng):
    # zf-equalized SINR from explicit matrices, not the eigenbasis
    for kind in ("rzf", "mf", "wiener"):
        h = random_channel(rng, 3, 2)
        rho = 4.0
        p = build_precoder(kind, h, rho).matrix
        w = build_zf_equalizer(h @ p)
        want = (rho / 2) / (np.abs(w) ** 2).sum(axis=1)
        assert np.allclose(sinr_precoded_zf_eq(h, rho, kind), want,
                           rtol=1e-9)


@pytest.mark.parametrize("pk,eq", ALL_CONFIGS,
                         ids=[f"{p.value}-{e.value}" for p, e in ALL_CONFIGS])
def test_closed_forms_match_literal_system(pk, eq):
    rng = np.random.default_rng(ALL_CONFIGS.index((pk, eq)))
    h = random_channel(rng, 3, 2)
    rho = 10.0
    cfg = LinkConfig(3, 2, rho, precoder=pk, equalizer=eq)
    out = build_precoder(pk, h, rho, cfg.c)
    amp = 1.0 if pk.is_zf else math.sqrt(rho / 2)
    comp = h @ out.matrix
    w = None
    if eq is EqualizerKind.ZF_EQ:
        w = build_zf_equalizer(comp)
    elif eq is EqualizerKind.MMSE_EQ:
        w = build_mmse_equalizer(comp, rho)
    measured = literal_sinr(h, out.matrix, amp, w, 10**6, rng)
    assert np.allclose(link_sinr(h, cfg), measured, rtol=0.02)


# -- properties ------------------------------------------------------------------

@given(st.sampled_from(ALL_CONFIGS), st.integers(1, 3), st.integers(0, 2),
       st.integers(0, 2**31))
def test_sinr_nonnegative_and_monotone_in_rho(config, n, extra, seed):
    pk, eq = config
    h = random_channel(np.random.default_rng(seed), n + extra, n)
    prev = None
    for rho in np.geomspace(0.1, 1e4, 12):
        g = link_sinr(h, LinkConfig(n + extra, n, rho, precoder=pk,
                                    equalizer=eq))
        assert g.shape == (n,) and np.all(np.isfinite(g)) and np.all(g >= 0)
        if prev is not None:
            assert np.all(g >= prev * (1 - 1e-9))
        prev = g


def test_mutual_info_examples():
    assert mutual_info([0.0, 0.0]) == 0.0
    assert mutual_info([1.0, 3.0]) == 3.0
    assert np.isclose(mutual_info([5.0, 5.0]), 2 * np.log2(6), atol=1e-12)
    assert np.isclose(mutual_info([5.0, 5.0]), 5.1699, atol=1e-4)
    with pytest.raises(DomainError):
        mutual_info([-1.0])


def test_link_config_validation():
    with pytest.raises(ConfigurationError):
        LinkConfig(1, 2, 1.0)
    with pytest.raises(ConfigurationError) as exc:
        LinkConfig(2, 2, 0.0)
    assert exc.value.field == "rho"
    with pytest.raises(ConfigurationError):
        LinkConfig(2, 2, 1.0, rate=-1)
    with pytest.raises(ConfigurationError) as exc:
        LinkConfig(2, 2, 1.0, precoder="zf_min_power", equalizer="zf")
    assert exc.value.field == "equalizer"
    with pytest.raises(ConfigurationError):
        LinkConfig(2, 2, 1.0, precoder="rzf", c=0.0)
    with pytest.raises(ValueError):
        LinkConfig(2, 2, 1.0, precoder="svd")
    cfg = LinkConfig(3, 3, 1.0, precoder="rzf")
    assert cfg.c == 3.0 and cfg.shift == 3.0
    assert LinkConfig(2, 2, 4.0, precoder="wiener").shift == 0.5
    assert cfg.with_rho(2.0).rho == 2.0 and cfg.with_rate(3).rate == 3
