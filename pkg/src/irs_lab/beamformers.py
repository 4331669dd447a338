"""Closed-form transmit, reflect and receive designs.

Every solver takes a :class:`~irs_lab.channels.ChannelSet` and a
:class:`~irs_lab.channels.SystemConfig` and returns a
:class:`BeamformerSolution`. Transmit matrices carry their power, so
``||V_k||_F^2`` is the power spent on user k. ``use_irs=False`` builds the
no-IRS counterpart: the reflection is zero and every stage is solved as if
the reflected path did not exist.

Power split: the two-stage leakage design gives every user ``P_T / K`` and
every sub-surface ``P_I / K``. The null-space and orthogonalization designs
add a reflected stream ``s_0`` for user 1 and split ``P_T`` equally over
the ``K + 1`` streams.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import steering_vector, ArrayGeometry
from .exceptions import ConfigError, InfeasibleConfigurationError, SingularMatrixError
from .matcore import (column_space_complement, fix_phase, generalized_top_eigvecs,
                      hermitian_top_eigpair, hermitian_top_eigvecs, hermitize,
                      null_space_projector, pinv)
from .validation import as_cmatrix, as_cvector

METHOD_TAGS = ("TLL-MMSE", "NSP-MTP-MRP", "SO-MMSE", "ZF-baseline")

MMSE_COND_LIMIT = 1e12
MMSE_RIDGE = 1e-12
# stage-1 pencil: ridge floor relative to the leakage matrix
SLNR_RIDGE_FLOOR = 1e-11
# stage-2 pencil: ridge relative to the trace of the denominator
PHASE_RIDGE = 1e-12


def _h(A):
    return A.conj().T


@dataclass
class ReflectionMatrix:
    """Diagonal reflection ``Theta = diag(coefficients)``, one entry per element."""

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = as_cvector(self.coefficients, "coefficients")

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n, dtype=np.complex128))

    @property
    def size(self):
        return self.coefficients.size

    @property
    def matrix(self):
        return np.diag(self.coefficients)

    @property
    def amplitudes(self):
        return np.abs(self.coefficients)

    @property
    def phases(self):
        return np.angle(self.coefficients)

    def reflect_power(self, incident, sigma2_irs):
        """``||Theta X||_F^2 + ||Theta||_F^2 sigma2_irs`` for incident signal ``X``."""
        X = np.asarray(incident, dtype=np.complex128).reshape(self.size, -1)
        return float(np.linalg.norm(self.coefficients[:, None] * X) ** 2
                     + np.sum(np.abs(self.coefficients) ** 2) * sigma2_irs)


@dataclass
class BeamformerSolution:
    """Beamformers for one channel realization.

    ``Theta`` is a single :class:`ReflectionMatrix` for the full surface or,
    for the split-surface design, a list with one entry per sub-surface.
    ``V0``/``U0`` hold the reflected stream of user 1 when the method has one.
    """

    V: list
    U: list
    Theta: object
    method_tag: str
    use_irs: bool = True
    V0: Optional[np.ndarray] = None
    U0: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def blocks(self):
        """Sub-surface index ranges matching ``thetas``."""
        if isinstance(self.Theta, list):
            out, start = [], 0
            for t in self.Theta:
                out.append(slice(start, start + t.size))
                start += t.size
            return out
        return [slice(0, self.Theta.size)]

    @property
    def thetas(self):
        return list(self.Theta) if isinstance(self.Theta, list) else [self.Theta]

    @property
    def full_theta(self):
        return np.concatenate([t.coefficients for t in self.thetas])

    def transmit_power(self):
        p = sum(np.linalg.norm(V) ** 2 for V in self.V)
        if self.V0 is not None:
            p += np.linalg.norm(self.V0) ** 2
        return float(p)

    def to_dict(self):
        def enc(A):
            A = np.asarray(A)
            return {"shape": list(A.shape), "re": A.real.ravel().tolist(), "im": A.imag.ravel().tolist()}
        return {
            "method": self.method_tag,
            "use_irs": self.use_irs,
            "V": [enc(V) for V in self.V],
            "U": [enc(U) for U in self.U],
            "Theta": [enc(t.coefficients) for t in self.thetas],
            "V0": None if self.V0 is None else enc(self.V0),
            "U0": None if self.U0 is None else enc(self.U0),
            "info": {k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool))},
        }


def irs_blocks(N, K):
    """Contiguous sub-surface slices of ``N / K`` elements each."""
    if N % K:
        raise ConfigError(f"N={N} is not divisible by K={K}; the surface cannot be split evenly")
    n = N // K
    return [slice(k * n, (k + 1) * n) for k in range(K)]


def _regularized_solve(R, rhs):
    R = hermitize(R, tol=1e-8, name="R")
    dim = R.shape[0]
    tr = float(np.real(np.trace(R)))
    if tr <= 0:
        raise SingularMatrixError("system matrix has zero trace")
    s = np.linalg.svd(R, compute_uv=False)
    if s[-1] <= s[0] / MMSE_COND_LIMIT:
        R = R + (MMSE_RIDGE * tr / dim) * np.eye(dim)
    try:
        return np.linalg.solve(R, rhs)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("system matrix is singular after regularization") from None


def mmse_receiver(signal_paths, interference_paths, noise_cov):
    """Linear MMSE combiner for the given signal and interference paths.

    ``U = (sum S S^H + sum J J^H + noise_cov)^{-1} sum S`` where ``S`` runs
    over ``signal_paths`` and ``J`` over ``interference_paths`` (each
    ``Q x L``). When the system matrix has condition number above 1e12,
    ``1e-12 * trace / dim`` is added to its diagonal.

    Raises
    ------
    SingularMatrixError
        If the system matrix is singular even after regularization.
    """
    noise_cov = as_cmatrix(noise_cov, "noise_cov")
    if np.real(np.trace(noise_cov)) <= 0:
        raise ConfigError("noise_cov must have positive trace")
    paths = [as_cmatrix(np.atleast_2d(P.T).T if np.ndim(P) == 1 else P, "path")
             for P in signal_paths]
    if not paths:
        raise ConfigError("mmse_receiver needs at least one signal path")
    R = noise_cov.astype(np.complex128)
    for P in paths:
        R = R + P @ _h(P)
    for P in interference_paths:
        P = np.asarray(P, dtype=np.complex128).reshape(R.shape[0], -1)
        R = R + P @ _h(P)
    return _regularized_solve(R, sum(paths))


def tll_phase_budget(theta_hat, A_theta, P_Ik, sigma2_irs):
    """Scale a unit phase direction so the sub-surface budget is met.

    ``mu = sqrt(P_Ik / (theta^H (A^H A + sigma2 I) theta))`` and the
    coefficients are ``mu * theta_hat``. ``A_theta`` may stack several
    ``diag(.)`` blocks vertically (one per stream).
    """
    theta_hat = as_cvector(theta_hat, "theta_hat")
    if abs(np.linalg.norm(theta_hat) - 1.0) > 1e-8:
        raise ConfigError("theta_hat must have unit norm")
    A = as_cmatrix(A_theta, "A_theta")
    if P_Ik < 0 or sigma2_irs < 0:
        raise ConfigError("power budget and noise variance must be nonnegative")
    denom = float(np.linalg.norm(A @ theta_hat) ** 2 + sigma2_irs)
    if denom <= 0:
        raise SingularMatrixError("zero incident power and zero IRS noise: budget undefined")
    return ReflectionMatrix(np.sqrt(P_Ik / denom) * theta_hat)


def _budget_scale(theta_hat, incident, P_I, sigma2_irs):
    # incident: N x S matrix of signals hitting the surface
    denom = float(np.linalg.norm(theta_hat[:, None] * incident) ** 2 + sigma2_irs)
    if denom <= 0:
        raise SingularMatrixError("zero incident power and zero IRS noise: budget undefined")
    return ReflectionMatrix(np.sqrt(P_I / denom) * theta_hat)


def _slnr_precoders(gains, P_Tk, C, L):
    """Stage 1: per-user SLNR maximizers from per-user Gram matrices."""
    K = len(gains)
    out = []
    for k in range(K):
        A = gains[k]
        B = sum((gains[j] for j in range(K) if j != k), np.zeros_like(A))
        ridge = max(C / P_Tk, SLNR_RIDGE_FLOOR * np.linalg.norm(B))
        if ridge <= 0:
            ridge = SLNR_RIDGE_FLOOR * max(np.linalg.norm(A), 1.0)
        D = B + ridge * np.eye(A.shape[0])
        pairs = generalized_top_eigvecs(A, D, L[k])
        V_hat = np.column_stack([p.vector for p in pairs]) / np.sqrt(L[k])
        out.append(np.sqrt(P_Tk) * V_hat)
    return out


def tll_mmse(channels, cfg, use_irs=True):
    """Two-stage leakage design with MMSE receivers on a split surface.

    The surface is cut into K contiguous sub-surfaces of ``N / K`` elements;
    sub-surface k serves user k.

    1. ``V_k`` maximizes the signal-to-leakage-plus-noise ratio of the
       direct plus sub-surface links (a generalized eigenvector).
    2. ``theta_k`` maximizes the reflected SLNR of sub-surface k, then is
       scaled to meet the budget ``P_I / K`` with equality.
    3. ``U_k`` is the MMSE combiner over all direct, reflected and
       interfering paths.

    Parameters
    ----------
    channels : ChannelSet
    cfg : SystemConfig
    use_irs : bool, default True
        When False the reflection is zero and stages 1 and 3 ignore it.

    Returns
    -------
    BeamformerSolution
    """
    channels.validate(cfg)
    K = cfg.K
    blocks = irs_blocks(cfg.N, K)
    P_Tk, P_Ik = cfg.P_T / K, cfg.P_I / K
    s_irs, s_z = cfg.sigma2_irs, cfg.sigma2_z
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H

    gains = []
    for k in range(K):
        g = _h(H_d[k]) @ H_d[k]
        if use_irs:
            Hk = H_BI[blocks[k]]
            g = g + _h(Hk) @ Hk
        gains.append(g)
    C = s_irs + s_z if use_irs else s_z
    V = _slnr_precoders(gains, P_Tk, C, cfg.L)

    if use_irs:
        thetas = []
        for k, blk in enumerate(blocks):
            a = H_BI[blk] @ V[k]                      # N_k x L_k incident
            n_k = a.shape[0]
            num = np.zeros((n_k, n_k), dtype=np.complex128)
            den = np.zeros_like(num)
            noise_diag = np.zeros(n_k)
            for j in range(K):
                Gkj = G_H[j][:, blk]                  # sub-surface k -> user j
                for l in range(a.shape[1]):
                    Aq = Gkj * a[:, l]                # G_kj^H diag(a_l)
                    term = _h(Aq) @ Aq
                    if j == k:
                        num += term
                    else:
                        den += term
                noise_diag += np.sum(np.abs(Gkj) ** 2, axis=0)
            den += s_irs * np.diag(noise_diag)
            tr = float(np.real(np.trace(den)))
            den += PHASE_RIDGE * (tr if tr > 0 else max(np.real(np.trace(num)), 1.0)) * np.eye(n_k)
            theta_hat = generalized_top_eigvecs(num, den, 1, pd_tol=1e-14)[0].vector
            A_theta = np.vstack([np.diag(a[:, l]) for l in range(a.shape[1])])
            thetas.append(tll_phase_budget(theta_hat, A_theta, P_Ik, s_irs))
    else:
        thetas = [ReflectionMatrix.zeros(b.stop - b.start) for b in blocks]

    U = []
    for k in range(K):
        sig, intf, noise = split_paths(channels, V, thetas, blocks, k, s_irs, s_z, use_irs)
        U.append(mmse_receiver(sig, intf, noise))
    return BeamformerSolution(V, U, thetas, "TLL-MMSE", use_irs)


def split_paths(channels, V, thetas, blocks, k, s_irs, s_z, use_irs=True):
    """Signal paths, interference paths and noise covariance at user k.

    Each sub-surface contributes its own path, matching the per-block sums
    of the split-surface rate and MMSE expressions.
    """
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    Q = H_d[k].shape[0]
    sig = [H_d[k] @ V[k]]
    intf = [H_d[k] @ V[i] for i in range(len(V)) if i != k]
    noise = s_z * np.eye(Q, dtype=np.complex128)
    if use_irs:
        for th, blk in zip(thetas, blocks):
            casc = (G_H[k][:, blk] * th.coefficients) @ H_BI[blk]
            sig.append(casc @ V[k])
            intf.extend(casc @ V[i] for i in range(len(V)) if i != k)
            GT = G_H[k][:, blk] * th.coefficients
            noise = noise + s_irs * (GT @ _h(GT))
    return sig, intf, noise


def _projected_top(P, H, side="right"):
    """Unit ``x`` in ``range(P)`` maximizing ``||H x||`` (right) or ``||H^H x||`` (left)."""
    Hp = H @ P if side == "right" else _h(H) @ P
    alpha = hermitian_top_eigpair(_h(Hp) @ Hp).vector
    x = P @ alpha
    nrm = np.linalg.norm(x)
    if nrm <= 1e-12:
        # target gain vanishes on the subspace: take its strongest column
        col = int(np.argmax(np.linalg.norm(P, axis=0)))
        x, nrm = P[:, col], np.linalg.norm(P[:, col])
    return fix_phase(x / nrm)


def _null_projector_or_fail(T, what):
    P = null_space_projector(T)
    if np.real(np.trace(P)) < 0.5:
        raise InfeasibleConfigurationError(
            f"{what}: the constraint matrix ({T.shape[0]}x{T.shape[1]}) leaves an empty null space")
    return P


def _transmit_nsp(T_list, H, M, what):
    if T_list:
        P = _null_projector_or_fail(np.vstack(T_list), what)
    else:
        P = np.eye(M, dtype=np.complex128)
    return _projected_top(P, H)


def _los_streams(channels, cfg, use_irs):
    return cfg.P_T / (cfg.K + 1) if use_irs else cfg.P_T / cfg.K


def _check_single_stream(cfg, name):
    if any(l != 1 for l in cfg.L):
        raise ConfigError(f"{name} supports one stream per user (L_k = 1)")


def nsp_mtp_mrp(channels, cfg, use_irs=True):
    """Null-space transmit, max-receive-power combining and phase alignment.

    User 1 gets an extra stream ``s_0`` routed through the surface. Each
    direct-link precoder ``v_k`` lives in the null space of the surface
    channel and of the other users' direct channels; ``v_0`` lives in the
    null space of every direct channel. Combiners ``u_k`` null the
    reflected link of user k and ``u_0`` nulls the direct link of user 1.
    The reflection phases align the cascade at ``u_0`` and the amplitude
    meets the surface budget ``P_I`` with equality.

    Raises
    ------
    InfeasibleConfigurationError
        If any constraint leaves an empty null space.
    """
    channels.validate(cfg)
    _check_single_stream(cfg, "NSP-MTP-MRP")
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    K, M = cfg.K, cfg.M
    p = _los_streams(channels, cfg, use_irs)
    V, U = [], []
    for k in range(K):
        T = ([H_BI] if use_irs else []) + [H_d[j] for j in range(K) if j != k]
        V.append(np.sqrt(p) * _transmit_nsp(T, H_d[k], M, f"v_{k + 1}")[:, None])
        if use_irs:
            Pu = column_space_complement(G_H[k])
            if np.real(np.trace(Pu)) < 0.5:
                raise InfeasibleConfigurationError(
                    f"u_{k + 1}: the reflected link spans the whole receive space")
        else:
            Pu = np.eye(H_d[k].shape[0], dtype=np.complex128)
        U.append(_projected_top(Pu, H_d[k], side="left")[:, None])
    if not use_irs:
        return BeamformerSolution(V, U, ReflectionMatrix.zeros(cfg.N), "NSP-MTP-MRP", False)

    v0 = np.sqrt(p) * _transmit_nsp(list(H_d), H_BI, M, "v_0")
    P0 = column_space_complement(H_d[0])
    if np.real(np.trace(P0)) < 0.5:
        raise InfeasibleConfigurationError("u_0: the direct link of user 1 spans the receive space")
    u0 = _projected_top(P0, G_H[0], side="left")
    incident = H_BI @ v0
    b = (_h(u0[:, None]) @ G_H[0]).ravel() * incident      # u0^H G1^H diag(H_BI v0)
    nb = np.linalg.norm(b)
    if nb <= 1e-300:
        theta_hat = np.full(cfg.N, 1.0 / np.sqrt(cfg.N), dtype=np.complex128)
    else:
        theta_hat = b.conj() / nb
    Theta = _budget_scale(theta_hat, incident[:, None], cfg.P_I, cfg.sigma2_irs)
    return BeamformerSolution(V, U, Theta, "NSP-MTP-MRP", True, V0=v0[:, None], U0=u0[:, None])


def so_mmse(channels, cfg, use_irs=True):
    """Sequentially orthogonalized transmit, Rayleigh-Ritz phase, MMSE receive.

    ``v_0`` is the BS steering vector toward the surface. ``v_1`` is
    projected off the surface channel and each later ``v_k`` additionally
    off the direct channels of users 1..k-1. The phase direction maximizes
    the reflected power at user 1 before combining; combiners are MMSE.
    """
    channels.validate(cfg)
    _check_single_stream(cfg, "SO-MMSE")
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    K, M = cfg.K, cfg.M
    s_irs, s_z = cfg.sigma2_irs, cfg.sigma2_z
    p = _los_streams(channels, cfg, use_irs)
    V = []
    for k in range(K):
        T = ([H_BI] if use_irs else []) + [H_d[j] for j in range(k)]
        V.append(np.sqrt(p) * _transmit_nsp(T, H_d[k], M, f"v_{k + 1}")[:, None])
    if not use_irs:
        U = [mmse_receiver([H_d[k] @ V[k]], [], s_z * np.eye(H_d[k].shape[0])) for k in range(K)]
        return BeamformerSolution(V, U, ReflectionMatrix.zeros(cfg.N), "SO-MMSE", False)

    if channels.angles is None:
        raise ConfigError("SO-MMSE needs LoS link angles to steer the reflected stream")
    v0 = np.sqrt(p) * steering_vector(channels.angles.bs_to_irs[0],
                                      ArrayGeometry(M, cfg.d_over_lambda))
    incident = H_BI @ v0
    Ad = G_H[0] * incident                                  # G1^H diag(H_BI v0)
    theta_hat = hermitian_top_eigpair(_h(Ad) @ Ad).vector
    Theta = _budget_scale(theta_hat, incident[:, None], cfg.P_I, s_irs)
    th = Theta.coefficients
    U = []
    refl = []
    for k in range(K):
        GT = G_H[k] * th
        noise = s_z * np.eye(H_d[k].shape[0]) + s_irs * (GT @ _h(GT))
        r = (GT @ incident)[:, None]
        refl.append((r, noise))
        U.append(mmse_receiver([H_d[k] @ V[k]], [r], noise))
    r1, noise1 = refl[0]
    u0 = mmse_receiver([r1], [H_d[0] @ V[0]], noise1)
    return BeamformerSolution(V, U, Theta, "SO-MMSE", True, V0=v0[:, None], U0=u0)


def zf_baseline(channels, cfg, use_irs=True):
    """Zero-forcing on the stacked direct channels plus phase alignment.

    Each user's effective row(s) are the top left singular vectors of its
    direct channel; the precoder is the pseudo-inverse of the stacked rows
    with columns scaled to ``P_T / K`` per user. The surface phases align
    the reflected signal of user 1 with its direct signal; the amplitude
    meets ``P_I`` over all incident streams. Receivers are matched filters
    on the effective channel.
    """
    channels.validate(cfg)
    H_BI, H_d, G_H = channels.H_BI, channels.H_d, channels.G_H
    K = cfg.K
    W, rows = [], []
    for k in range(K):
        Uk, _, _ = np.linalg.svd(H_d[k], full_matrices=False)
        Wk = np.column_stack([fix_phase(Uk[:, l]) for l in range(cfg.L[k])])
        W.append(Wk)
        rows.append(_h(Wk) @ H_d[k])
    Vall = pinv(np.vstack(rows))
    V, start = [], 0
    for k in range(K):
        Vk = Vall[:, start:start + cfg.L[k]]
        start += cfg.L[k]
        nrm = np.linalg.norm(Vk)
        if nrm <= 1e-300:
            raise InfeasibleConfigurationError(f"user {k + 1} has a zero zero-forcing direction")
        V.append(np.sqrt(cfg.P_T / K) * Vk / nrm)

    if use_irs:
        w1, v1 = W[0][:, 0], V[0][:, 0]
        b = (w1.conj() @ G_H[0]) * (H_BI @ v1)
        direct = w1.conj() @ H_d[0] @ v1
        rot = np.exp(1j * np.angle(direct)) if abs(direct) > 0 else 1.0
        nb = np.linalg.norm(b)
        theta_hat = (b.conj() / nb * rot) if nb > 1e-300 else \
            np.full(cfg.N, 1.0 / np.sqrt(cfg.N), dtype=np.complex128)
        incident = H_BI @ np.hstack(V)
        Theta = _budget_scale(theta_hat, incident, cfg.P_I, cfg.sigma2_irs)
    else:
        Theta = ReflectionMatrix.zeros(cfg.N)
    th = Theta.coefficients
    U = [(H_d[k] + (G_H[k] * th) @ H_BI) @ V[k] for k in range(K)]
    return BeamformerSolution(V, U, Theta, "ZF-baseline", use_irs)


SOLVERS = {
    "TLL-MMSE": tll_mmse,
    "NSP-MTP-MRP": nsp_mtp_mrp,
    "SO-MMSE": so_mmse,
    "ZF-baseline": zf_baseline,
}


def solve(method, channels, cfg, use_irs=True):
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHOD_TAGS}") from None
    return fn(channels, cfg, use_irs=use_irs)
