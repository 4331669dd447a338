"""Rates, SNRs and the receive-power diagnostic.

Two rate families are provided. The determinant form (split or full
surface) is used for the leakage design and the zero-forcing baseline; the
scalar SINR form, where user 1 adds the rate of its reflected stream to the
rate of its direct stream, is used for the two LoS designs.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .beamformers import MMSE_COND_LIMIT, MMSE_RIDGE, split_paths
from .exceptions import ConfigError, SingularMatrixError
from .validation import as_square

SNR_FLOOR_DB = -300.0


@dataclass
class RateReport:
    per_user_rate: list
    sum_rate: float
    per_user_snr_dB: list
    trial_seed: int = 0

    def to_dict(self):
        return asdict(self)


def _h(A):
    return A.conj().T


def rate_det(A1, A2, B1, B2, B3):
    """``log2 det(I + (A1 + A2)(B1 + B2 + B3)^{-1})`` in bits/s/Hz.

    Evaluated through the Cholesky factor ``L`` of the B-sum as the sum of
    ``log2(1 + lambda)`` over the eigenvalues of ``L^{-1} (A1 + A2) L^{-H}``
    (negative roundoff eigenvalues clipped to zero). A B-sum with condition
    number above 1e12 gets ``1e-12 * trace / dim`` added to its diagonal.

    Raises
    ------
    SingularMatrixError
        If the B-sum is not positive definite after regularization.
    """
    A = as_square(A1, "A1") + as_square(A2, "A2")
    B = as_square(B1, "B1") + as_square(B2, "B2") + as_square(B3, "B3")
    if A.shape != B.shape:
        raise ConfigError("signal and interference terms must have equal shape")
    A = 0.5 * (A + _h(A))
    B = 0.5 * (B + _h(B))
    tr = float(np.real(np.trace(B)))
    if tr <= 0:
        raise SingularMatrixError("interference-plus-noise matrix has zero trace")
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= s[0] / MMSE_COND_LIMIT:
        B = B + (MMSE_RIDGE * tr / B.shape[0]) * np.eye(B.shape[0])
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("interference-plus-noise matrix is not positive definite") from None
    X = np.linalg.solve(L, np.linalg.solve(L, A).conj().T).conj().T
    lam = np.clip(np.linalg.eigvalsh(0.5 * (X + _h(X))), 0.0, None)
    return float(np.sum(np.log2(1.0 + lam)))


def rate_sinr(signal_power, interference_power, noise_power):
    """``log2(1 + signal / (interference + noise))``."""
    if signal_power < 0 or interference_power < 0 or noise_power < 0:
        raise ConfigError("powers must be nonnegative")
    if noise_power <= 0:
        raise ConfigError("noise_power must be positive")
    return float(np.log2(1.0 + signal_power / (interference_power + noise_power)))


def _db(x):
    return float(10.0 * np.log10(x)) if x > 0 else SNR_FLOOR_DB


def _det_terms(solution, channels, cfg, k):
    V, U = solution.V, solution.U[k]
    sig, intf, noise = split_paths(channels, V, solution.thetas, solution.blocks, k,
                                   cfg.sigma2_irs, cfg.sigma2_z, solution.use_irs)
    Uh = _h(U)

    def gram(paths):
        out = np.zeros((U.shape[1], U.shape[1]), dtype=np.complex128)
        for P in paths:
            X = Uh @ P
            out += X @ _h(X)
        return out

    A1 = gram(sig[:1])
    A2 = gram(sig[1:])
    n_i = len(V) - 1
    B1 = gram(intf[:n_i])
    B2 = gram(intf[n_i:])
    B3 = Uh @ noise @ U
    return A1, A2, B1, B2, B3


def _det_report(solution, channels, cfg, seed):
    rates, snrs = [], []
    for k in range(cfg.K):
        A1, A2, B1, B2, B3 = _det_terms(solution, channels, cfg, k)
        rates.append(rate_det(A1, A2, B1, B2, B3))
        snrs.append(_db(np.real(np.trace(A1 + A2)) / np.real(np.trace(B3))))
    return RateReport(rates, float(sum(rates)), snrs, seed)


def _los_terms(solution, channels, cfg, leakage):
    """(signal, interference, noise) per stream; index 0 is user 1's
    reflected stream (absent without the surface)."""
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    th = solution.full_theta
    s_irs, s_z = cfg.sigma2_irs, cfg.sigma2_z
    V = [v[:, 0] for v in solution.V]
    has0 = solution.use_irs and solution.V0 is not None
    v0 = solution.V0[:, 0] if has0 else np.zeros(cfg.M, dtype=np.complex128)

    def noise(u, k):
        return s_z * np.linalg.norm(u) ** 2 + s_irs * np.linalg.norm((u.conj() @ G_H[k]) * th) ** 2

    def casc(k):
        return (G_H[k] * th) @ H_BI

    out = {}
    for k in range(cfg.K):
        u = solution.U[k][:, 0]
        if leakage == "closed-form":
            sgn = abs(u.conj() @ H_d[k] @ V[k]) ** 2
            itf = abs(u.conj() @ casc(k) @ v0) ** 2
        else:
            Heff = H_d[k] + casc(k)
            sgn = abs(u.conj() @ Heff @ V[k]) ** 2
            itf = sum(abs(u.conj() @ Heff @ x) ** 2 for j, x in enumerate(V) if j != k)
            itf += abs(u.conj() @ Heff @ v0) ** 2
        out[k + 1] = (sgn, itf, noise(u, k))
    if has0:
        u0 = solution.U0[:, 0]
        if leakage == "closed-form":
            sgn = abs(u0.conj() @ casc(0) @ v0) ** 2
            itf = abs(u0.conj() @ H_d[0] @ V[0]) ** 2
        else:
            Heff = H_d[0] + casc(0)
            sgn = abs(u0.conj() @ Heff @ v0) ** 2
            itf = sum(abs(u0.conj() @ Heff @ x) ** 2 for x in V)
        out[0] = (sgn, itf, noise(u0, 0))
    return out


def _sinr_report(solution, channels, cfg, seed, leakage):
    terms = _los_terms(solution, channels, cfg, leakage)
    rates, snrs = [], []
    for k in range(1, cfg.K + 1):
        s, i, n = terms[k]
        r = rate_sinr(s, i, n)
        S, Nn = s, n
        if k == 1 and 0 in terms:
            s0, i0, n0 = terms[0]
            r += rate_sinr(s0, i0, n0)
            S, Nn = s + s0, n + n0
        rates.append(r)
        snrs.append(_db(S / Nn))
    return RateReport(rates, float(sum(rates)), snrs, seed)


SINR_METHODS = ("NSP-MTP-MRP", "SO-MMSE")


def evaluate(solution, channels, cfg, seed=0, leakage="closed-form"):
    """Per-user rates and SNRs of a solution on a channel realization.

    Parameters
    ----------
    leakage : {"closed-form", "full"}
        Scalar SINR forms only. ``"closed-form"`` counts, for each stream, the
        interference terms of the closed-form rate expressions; ``"full"``
        passes every stream through the full effective channel and counts
        all other streams as interference.
    """
    if leakage not in ("closed-form", "full"):
        raise ConfigError(f"leakage must be 'closed-form' or 'full', got {leakage!r}")
    if solution.method_tag in SINR_METHODS:
        return _sinr_report(solution, channels, cfg, seed, leakage)
    return _det_report(solution, channels, cfg, seed)


def snr_per_stream(solution, channels, cfg):
    """Per-user combiner-output signal power over noise power, in dB."""
    return evaluate(solution, channels, cfg).per_user_snr_dB


def average_receive_power(solution, channels, cfg):
    """Per-user receive-power diagnostic with Frobenius norms of each term.

    Sums, for user k, the Frobenius norms of the desired direct and
    reflected terms, the interference through both paths, and the two noise
    terms (full surface). Not used by any rate.
    """
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    th = solution.full_theta
    out = []
    for k in range(cfg.K):
        U = solution.U[k]
        Uh = _h(U)
        casc = (G_H[k] * th) @ H_BI

        def fro(X):
            return float(np.linalg.norm(X @ _h(X)))

        total = fro(Uh @ H_d[k] @ solution.V[k]) + fro(Uh @ casc @ solution.V[k])
        for i, Vi in enumerate(solution.V):
            if i != k:
                total += fro(Uh @ H_d[k] @ Vi) + fro(Uh @ casc @ Vi)
        GT = (Uh @ G_H[k]) * th
        total += cfg.sigma2_irs * float(np.linalg.norm(GT @ _h(GT)))
        total += cfg.sigma2_z * float(np.linalg.norm(Uh @ U))
        out.append(total)
    return out
