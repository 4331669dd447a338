"""Rank bounds on the IRS-aided effective channel and their numerical checks.

The multi-user quantity is the rank of the stacked effective channel
``[H_hat_1; ...; H_hat_K]`` (N_U x M) with ``H_hat_k = G_k^H Theta H_BI + H_dk``.
Writing it as ``H_d_stack + G_stack^H Theta H_BI`` gives

    rank <= rank(H_d_stack) + min(rank(G_stack), rank(H_BI))
         <= sum(I_k) + min(sum(J_k), rank(H_BI))

capped by ``min(N_U, M)``. Without the IRS the cap is ``sum(I_k)``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .channels import SystemConfig, Regime, realize_channels, trial_rng
from .exceptions import ConfigError, DofBoundViolation, DofPremiseError, NoVisibleSolutionError
from .matcore import numerical_rank
from .validation import as_cmatrix, check_count

DOF_RANK_TOL = 1e-8


@dataclass
class DofReport:
    """Outcome of a rank-bound check.

    ``effective_rank`` and ``no_irs_rank`` are maxima over the trials.
    """

    effective_rank: int
    upper_bound: int
    bound_case: str
    no_irs_rank: int
    no_irs_bound: int
    trials: int
    achievement_fraction: float
    violations: int

    def to_dict(self):
        return asdict(self)


def _theta_vector(Theta, N):
    coeffs = getattr(Theta, "coefficients", Theta)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.ndim == 2:
        if coeffs.shape != (N, N):
            raise ConfigError(f"Theta must be {N}x{N}, got {coeffs.shape}")
        coeffs = np.diag(coeffs)
    if coeffs.shape != (N,):
        raise ConfigError(f"Theta must hold {N} coefficients, got shape {coeffs.shape}")
    return coeffs


def effective_channel(H_d, G_H, Theta, H_BI):
    """``G_H @ diag(Theta) @ H_BI + H_d`` for one user.

    ``Theta`` may be a coefficient vector, a diagonal matrix or any object
    with a ``coefficients`` attribute.
    """
    H_d = as_cmatrix(H_d, "H_d")
    G_H = as_cmatrix(G_H, "G_H")
    H_BI = as_cmatrix(H_BI, "H_BI")
    if G_H.shape[0] != H_d.shape[0] or G_H.shape[1] != H_BI.shape[0] or H_BI.shape[1] != H_d.shape[1]:
        raise ConfigError(
            f"incompatible shapes H_d {H_d.shape}, G_H {G_H.shape}, H_BI {H_BI.shape}")
    theta = _theta_vector(Theta, H_BI.shape[0])
    return (G_H * theta) @ H_BI + H_d


def stacked_effective_channel(channels, Theta):
    return np.vstack([effective_channel(Hd, G, Theta, channels.H_BI)
                      for Hd, G in zip(channels.H_d, channels.G_H)])


def _regime_ranks(cfg, regime):
    M, N, Q = cfg.M, cfg.N, cfg.Q
    if regime.name == "LoS+LoS":
        return [1] * cfg.K, [1] * cfg.K, 1, "LoS"
    if regime.name == "LoS+Rayleigh":
        return [1] * cfg.K, [min(q, N) for q in Q], min(N, M), "multi-user"
    if regime.name == "Rayleigh":
        return [min(q, M) for q in Q], [min(q, N) for q in Q], min(N, M), "full-rank"
    return list(regime.I), list(regime.J), min(N, M), "rank-deficient"


def _check_ranks(cfg, ranks):
    if len(ranks) != cfg.K:
        raise DofPremiseError(f"ranks lists {len(ranks)} users for K={cfg.K}")
    I, J = [], []
    for k, pair in enumerate(ranks):
        i, j = (check_count(int(r), "rank") for r in pair)
        q = cfg.Q[k]
        if i > q or j > q:
            raise DofPremiseError(f"user {k}: ranks ({i}, {j}) exceed Q_k={q}")
        # the full-rank reflected link (J_k = Q_k) is the one exception to
        # the I_k + J_k <= Q_k premise
        if i + j > q and j != q:
            raise DofPremiseError(f"user {k}: I_k + J_k = {i + j} exceeds Q_k = {q}")
        I.append(i)
        J.append(j)
    return I, J


def bound_details(cfg, ranks=None, regime=None):
    """``(upper_bound, bound_case, no_irs_bound)`` for a configuration."""
    regime = cfg.regime if regime is None else Regime.parse(regime)
    I, J, rank_bi, case = _regime_ranks(cfg, regime)
    if ranks is not None:
        I, J = _check_ranks(cfg, ranks)
        rank_bi = min(cfg.N, cfg.M) if regime.name != "LoS+LoS" else 1
        case = "rank-deficient" if regime.name != "LoS+LoS" else "LoS"
    cap = min(cfg.N_U, cfg.M)
    bound = min(sum(I) + min(sum(J), rank_bi, cfg.N), cap)
    no_irs = min(sum(I), cap)
    return bound, case, no_irs


def dof_upper_bound(cfg, ranks=None, regime=None):
    """Upper bound on the rank of the stacked effective channel.

    Parameters
    ----------
    cfg : SystemConfig
    ranks : sequence of (I_k, J_k), optional
        Per-user ranks of the direct and reflected links. Defaults to the
        ranks implied by the configured regime.
    regime : str or Regime, optional
        Overrides ``cfg.regime``.

    Raises
    ------
    DofPremiseError
        If a user's ranks violate ``I_k + J_k <= Q_k`` (unless ``J_k = Q_k``).
    """
    return bound_details(cfg, ranks, regime)[0]


def random_unit_theta(N, rng):
    return np.exp(2j * np.pi * rng.random(N))


def dof_report(cfg, trials=100, seed=0, theta="random"):
    """Measure realized ranks against the bound over ``trials`` draws.

    Channels are drawn without path loss so rank decisions are not
    skewed by the gap between direct and reflected link gains. ``theta`` is
    ``"random"`` (unit modulus, uniform phases) or ``"zero"``.
    """
    trials = check_count(trials, "trials")
    if theta not in ("random", "zero"):
        raise ConfigError(f"theta must be 'random' or 'zero', got {theta!r}")
    bound, case, no_irs_bound = bound_details(cfg)
    best = best_no_irs = hits = violations = 0
    for t in range(trials):
        rng = trial_rng(seed, 0, t)
        ch = realize_channels(cfg, rng, include_pathloss=False)
        th = random_unit_theta(cfg.N, rng) if theta == "random" else np.zeros(cfg.N)
        r = numerical_rank(stacked_effective_channel(ch, th), DOF_RANK_TOL)
        r0 = numerical_rank(np.vstack(ch.H_d), DOF_RANK_TOL)
        best, best_no_irs = max(best, r), max(best_no_irs, r0)
        hits += r == bound
        violations += (r > bound) + (r0 > no_irs_bound)
    return DofReport(best, bound, case, best_no_irs, no_irs_bound, trials,
                     hits / trials, violations)


def verify_doubling(cfg, trials=500, seed=0, theta="random"):
    """Fraction of trials whose stacked rank reaches ``sum(I_k) + sum(J_k)``.

    Requires the rank-deficient regime with ``N_U <= min(N, M)``. Every
    trial is also checked against the bound.

    Raises
    ------
    DofPremiseError
        If the premises of the doubling result do not hold.
    DofBoundViolation
        If any trial exceeds the upper bound.
    """
    if cfg.regime.name != "rank-deficient":
        raise DofPremiseError("verify_doubling needs the rank-deficient regime")
    if cfg.N_U > min(cfg.N, cfg.M):
        raise DofPremiseError(f"N_U={cfg.N_U} exceeds min(N, M)={min(cfg.N, cfg.M)}")
    report = dof_report(cfg, trials, seed, theta)
    if report.violations:
        raise DofBoundViolation(
            f"{report.violations} trial(s) exceeded the bound {report.upper_bound}")
    return report.achievement_fraction


def oc_angle(theta_Bkt, i, M, d_over_lambda=0.5):
    """Departure angle orthogonal to ``theta_Bkt`` on an M-element ULA.

    Returns ``arccos(cos(theta_Bkt) + i / (M * d_over_lambda))`` in degrees.

    Raises
    ------
    NoVisibleSolutionError
        If the cosine argument leaves [-1, 1].
    """
    M = check_count(M, "M")
    if isinstance(i, bool) or int(i) != i:
        raise ConfigError(f"i must be an integer, got {i!r}")
    if not d_over_lambda > 0:
        raise ConfigError("d_over_lambda must be positive")
    c = np.cos(np.deg2rad(float(theta_Bkt))) + int(i) / (M * d_over_lambda)
    if abs(c) > 1.0 + 1e-12:
        raise NoVisibleSolutionError(
            f"no visible-region solution: cos argument {c:.6g} is outside [-1, 1]")
    return float(np.rad2deg(np.arccos(np.clip(c, -1.0, 1.0))))
