import numpy as np
import pytest

from conftest import los_config, rayleigh_config
from irs_lab.beamformers import so_mmse, solve, tll_mmse, zf_baseline
from irs_lab.channels import realize_channels, trial_rng
from irs_lab.exceptions import ConfigError, SingularMatrixError
from irs_lab.metrics import average_receive_power, evaluate, rate_det, rate_sinr, snr_per_stream


def rand_c(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def psd(rng, n, r=None):
    X = rand_c(rng, n, r or n)
    return X @ X.conj().T


def slogdet_rate(A, B):
    # independent oracle: LU-based log-determinants
    _, l1 = np.linalg.slogdet(B + A)
    _, l2 = np.linalg.slogdet(B)
    return (l1 - l2) / np.log(2)


def test_rate_det_zero_signal():
    Z = np.zeros((2, 2))
    assert rate_det(Z, Z, Z, Z, np.eye(2)) == 0.0


def test_rate_det_scalar():
    one = np.array([[1.0]])
    zero = np.zeros((1, 1))
    assert rate_det(3 * one, zero, one, zero, one) == pytest.approx(np.log2(2.5), abs=1e-14)


def test_rate_det_matches_slogdet():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        A1, A2 = psd(rng, n, 1), psd(rng, n, 1)
        B1, B2 = psd(rng, n, 1), psd(rng, n, 2)
        B3 = 0.1 * np.eye(n)
        got = rate_det(A1, A2, B1, B2, B3)
        assert got == pytest.approx(slogdet_rate(A1 + A2, B1 + B2 + B3), abs=1e-9)
        assert got >= 0


def test_rate_det_invariant_to_receive_recombination():
    # the rate of a receive filter U equals the rate of U T for invertible T
    rng = np.random.default_rng(1)
    Q, L = 4, 2
    H = [rand_c(rng, Q, L) for _ in range(3)]
    N = 0.2 * np.eye(Q)
    U = rand_c(rng, Q, L)
    T = rand_c(rng, L, L) + 2 * np.eye(L)

    def rate(W):
        g = [W.conj().T @ X @ X.conj().T @ W for X in H]
        return rate_det(g[0], np.zeros_like(g[0]), g[1], g[2], W.conj().T @ N @ W)

    assert rate(U @ T) == pytest.approx(rate(U), abs=1e-9)


def test_rate_det_errors():
    with pytest.raises(SingularMatrixError):
        rate_det(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ConfigError):
        rate_det(np.eye(2), np.zeros((2, 2)), np.eye(3), np.zeros((3, 3)), np.eye(3))


def test_rate_det_regularizes_ill_conditioned():
    B = np.diag([1.0, 1e-20])
    r = rate_det(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), B)
    assert np.isfinite(r) and r > 0


def test_rate_sinr_examples():
    assert rate_sinr(1.0, 0.0, 1.0) == pytest.approx(1.0)
    assert rate_sinr(3.0, 1.0, 1.0) == pytest.approx(np.log2(2.5))
    assert rate_sinr(0.0, 5.0, 1.0) == 0.0
    with pytest.raises(ConfigError):
        rate_sinr(-1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        rate_sinr(1.0, 0.0, 0.0)


def test_rate_sinr_monotone():
    s = np.linspace(0, 10, 50)
    r = [rate_sinr(x, 0.5, 1.0) for x in s]
    assert np.all(np.diff(r) > 0)
    r = [rate_sinr(1.0, x, 1.0) for x in s]
    assert np.all(np.diff(r) < 0)


@pytest.mark.parametrize("method,kind", [("TLL-MMSE", "ray"), ("ZF-baseline", "ray"), ("NSP-MTP-MRP", "los"),
                                         ("SO-MMSE", "los")])
def test_snr_tracks_noise_exactly(method, kind):
    cfg = rayleigh_config() if kind == "ray" else los_config(K=2)
    ch = realize_channels(cfg, trial_rng(0, 0, 0))
    sol = solve(method, ch, cfg)
    noisy = cfg.replace(sigma2_irs_dBm=cfg.sigma2_irs_dBm + 10, sigma2_z_dBm=cfg.sigma2_z_dBm + 10)
    a = snr_per_stream(sol, ch, cfg)
    b = snr_per_stream(sol, ch, noisy)
    np.testing.assert_allclose(np.subtract(a, b), 10.0, atol=1e-9)


def test_snr_tracks_transmit_power_single_user():
    cfg = rayleigh_config(K=1)
    ch = realize_channels(cfg, trial_rng(0, 0, 0))
    hi = cfg.replace(P_T_dBm=cfg.P_T_dBm + 5)
    a = snr_per_stream(tll_mmse(ch, cfg, use_irs=False), ch, cfg)[0]
    b = snr_per_stream(tll_mmse(ch, hi, use_irs=False), ch, hi)[0]
    assert b - a == pytest.approx(5.0, abs=1e-9)


def test_surface_raises_snr():
    # high-noise P_T sweep configuration, K=2 at 25 dBm, averaged over draws
    from irs_lab.harness import SweepSpec
    cfg = SweepSpec.load("tll_bs_power_high_noise").base_config.replace(P_T_dBm=25)
    gap = []
    for t in range(20):
        ch = realize_channels(cfg, trial_rng(0, 0, t))
        gap.append(np.mean(snr_per_stream(tll_mmse(ch, cfg), ch, cfg))
                   - np.mean(snr_per_stream(tll_mmse(ch, cfg, use_irs=False), ch, cfg)))
    assert np.mean(gap) > 0


def test_first_user_gets_reflected_stream(los_case):
    cfg, ch = los_case
    rep = evaluate(so_mmse(ch, cfg), ch, cfg)
    base = evaluate(so_mmse(ch, cfg, use_irs=False), ch, cfg)
    assert rep.per_user_rate[0] > base.per_user_rate[0]
    assert rep.sum_rate == pytest.approx(sum(rep.per_user_rate))


def test_leakage_modes(los_case):
    cfg, ch = los_case
    sol = so_mmse(ch, cfg)
    full = evaluate(sol, ch, cfg, leakage="full")
    closed = evaluate(sol, ch, cfg, leakage="closed-form")
    assert full.sum_rate <= closed.sum_rate + 1e-9
    with pytest.raises(ConfigError):
        evaluate(sol, ch, cfg, leakage="none")


def test_rates_nonnegative_and_report_dict(rayleigh_case):
    cfg, ch = rayleigh_case
    for fn in (tll_mmse, zf_baseline):
        rep = evaluate(fn(ch, cfg), ch, cfg, seed=7)
        assert all(r >= 0 for r in rep.per_user_rate)
        d = rep.to_dict()
        assert d["trial_seed"] == 7 and len(d["per_user_snr_dB"]) == cfg.K


def test_average_receive_power(rayleigh_case):
    cfg, ch = rayleigh_case
    p = average_receive_power(tll_mmse(ch, cfg), ch, cfg)
    assert len(p) == cfg.K and all(np.isfinite(x) and x > 0 for x in p)
