"""Scenario configuration, steering vectors and channel realization.

Conventions
-----------
* Powers and noise variances are configured in dBm and used internally in
  milliwatts.
* Every node carries a uniform linear array whose axis lies in the
  horizontal plane at azimuth ``array_axis_deg`` (default 90, the y-axis).
  The angle of a link at a node is the angle between that axis and the 3-D
  line of sight to the peer node, so ``cos(theta)`` is the direction cosine
  that drives the ULA phase progression. 90 degrees is broadside.
* Large-scale fading follows a log-distance law,
  ``PL_dB = ref_loss_dB - 10 * exponent * log10(d)`` with 3-D distance ``d``
  in meters; the direct link uses ``exponent_direct`` and both legs of the
  reflected link use ``exponent_reflect``.
* Small-scale Rayleigh entries are CN(0, 1) before path loss.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigError
from .validation import as_cmatrix, check_count, check_finite, check_point

REGIMES = ("LoS+LoS", "LoS+Rayleigh", "rank-deficient", "Rayleigh")
_REGIME_ALIASES = {r.lower(): r for r in REGIMES}
_REGIME_ALIASES.update({"los": "LoS+LoS", "los+los": "LoS+LoS", "full-rank": "Rayleigh",
                        "rank_deficient": "rank-deficient", "low-rank": "rank-deficient"})


def dbm_to_mw(x_dbm):
    return 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0)


def mw_to_dbm(x_mw):
    return 10.0 * np.log10(x_mw)


def trial_rng(master_seed, *indices):
    """Generator seeded by hashing ``master_seed`` with trial indices."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, indices)]))


@dataclass(frozen=True)
class ArrayGeometry:
    """A uniform linear array: element count and spacing in wavelengths."""

    num_elements: int
    element_spacing_d: float = 0.5

    def __post_init__(self):
        check_count(self.num_elements, "num_elements")
        if not (np.isfinite(self.element_spacing_d) and self.element_spacing_d > 0):
            raise ConfigError(f"element_spacing_d must be > 0, got {self.element_spacing_d}")


@dataclass(frozen=True)
class Regime:
    """Channel regime; ``I``/``J`` are the per-user direct/reflect ranks
    (rank-deficient regime only)."""

    name: str
    I: Optional[tuple] = None
    J: Optional[tuple] = None

    @classmethod
    def parse(cls, value):
        if isinstance(value, Regime):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key not in _REGIME_ALIASES:
                raise ConfigError(f"unknown regime {value!r}; expected one of {REGIMES}")
            return cls(_REGIME_ALIASES[key])
        if isinstance(value, dict):
            name = Regime.parse(value.get("name", "")).name
            I = value.get("I")
            J = value.get("J")
            return cls(name, None if I is None else tuple(int(i) for i in I),
                       None if J is None else tuple(int(j) for j in J))
        raise ConfigError(f"cannot interpret regime {value!r}")

    @property
    def los_direct(self):
        return self.name in ("LoS+LoS", "LoS+Rayleigh")

    @property
    def los_reflect(self):
        return self.name == "LoS+LoS"

    def to_json(self):
        if self.name == "rank-deficient":
            return {"name": self.name, "I": list(self.I), "J": list(self.J)}
        return self.name


@dataclass(frozen=True)
class PathLoss:
    exponent_direct: float = 2.2
    exponent_reflect: float = 2.0
    ref_loss_dB: float = -30.0


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters of one active-IRS multi-user downlink.

    ``Q`` and ``L`` are per-user antenna and stream counts. ``positions``
    maps ``"bs"``, ``"irs"`` to 3-D points and ``"users"`` to a list of K
    points (meters). ``angles`` optionally overrides geometry-derived LoS
    angles: ``{"bs_to_irs": [dep, arr], "bs_to_user": [[dep, arr], ...],
    "irs_to_user": [[dep, arr], ...]}`` in degrees.
    """

    M: int
    N: int
    K: int
    Q: tuple
    L: tuple = None
    P_T_dBm: float = 40.0
    P_I_dBm: float = 30.0
    sigma2_irs_dBm: float = -90.0
    sigma2_z_dBm: float = -120.0
    positions: dict = None
    regime: Regime = Regime("LoS+Rayleigh")
    pathloss: PathLoss = PathLoss()
    d_over_lambda: float = 0.5
    array_axis_deg: float = 90.0
    angles: Optional[dict] = None

    def __post_init__(self):
        set_ = object.__setattr__
        check_count(self.M, "M")
        check_count(self.N, "N")
        K = check_count(self.K, "K")
        Q = tuple(check_count(q, "Q_k") for q in np.atleast_1d(self.Q).tolist())
        if len(Q) == 1 and K > 1:
            Q = Q * K
        if len(Q) != K:
            raise ConfigError(f"Q has {len(Q)} entries for K={K} users")
        set_(self, "Q", Q)
        L = (1,) * K if self.L is None else tuple(
            check_count(l, "L_k") for l in np.atleast_1d(self.L).tolist())
        if len(L) == 1 and K > 1:
            L = L * K
        if len(L) != K:
            raise ConfigError(f"L has {len(L)} entries for K={K} users")
        if sum(L) > self.M:
            raise ConfigError(f"sum(L_k)={sum(L)} exceeds M={self.M}")
        if any(l > q for l, q in zip(L, Q)):
            raise ConfigError("each L_k must not exceed Q_k")
        set_(self, "L", L)
        for name in ("P_T_dBm", "P_I_dBm", "sigma2_irs_dBm", "sigma2_z_dBm",
                     "d_over_lambda", "array_axis_deg"):
            set_(self, name, check_finite(getattr(self, name), name))
        if self.d_over_lambda <= 0:
            raise ConfigError("d_over_lambda must be positive")
        regime = Regime.parse(self.regime)
        if regime.name == "rank-deficient":
            if regime.I is None or regime.J is None or len(regime.I) != K or len(regime.J) != K:
                raise ConfigError("rank-deficient regime needs I and J with K entries each")
            for k, (i, j, q) in enumerate(zip(regime.I, regime.J, Q)):
                if i < 1 or j < 1 or i > min(q, self.M) or j > min(q, self.N):
                    raise ConfigError(f"user {k}: ranks I={i}, J={j} out of range for Q={q}")
                if i + j > q:
                    raise ConfigError(f"user {k}: I_k + J_k = {i + j} exceeds Q_k = {q}")
        set_(self, "regime", regime)
        pl = self.pathloss
        if isinstance(pl, dict):
            pl = PathLoss(**pl)
        set_(self, "pathloss", PathLoss(*(check_finite(v, "pathloss") for v in dataclasses.astuple(pl))))
        set_(self, "positions", _check_positions(self.positions, K))

    # linear-scale views (mW)
    @property
    def P_T(self):
        return float(dbm_to_mw(self.P_T_dBm))

    @property
    def P_I(self):
        return float(dbm_to_mw(self.P_I_dBm))

    @property
    def sigma2_irs(self):
        return float(dbm_to_mw(self.sigma2_irs_dBm))

    @property
    def sigma2_z(self):
        return float(dbm_to_mw(self.sigma2_z_dBm))

    @property
    def N_U(self):
        return sum(self.Q)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {
            "M": self.M, "N": self.N, "K": self.K, "Q": list(self.Q), "L": list(self.L),
            "P_T_dBm": self.P_T_dBm, "P_I_dBm": self.P_I_dBm,
            "sigma2_irs_dBm": self.sigma2_irs_dBm, "sigma2_z_dBm": self.sigma2_z_dBm,
            "positions": {"bs": self.positions["bs"].tolist(),
                          "irs": self.positions["irs"].tolist(),
                          "users": [u.tolist() for u in self.positions["users"]]},
            "regime": self.regime.to_json(),
            "pathloss": dataclasses.asdict(self.pathloss),
            "d_over_lambda": self.d_over_lambda,
            "array_axis_deg": self.array_axis_deg,
            **({"angles": self.angles} if self.angles else {}),
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("SystemConfig JSON must be an object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown SystemConfig fields: {sorted(unknown)}")
        missing = {"M", "N", "K", "Q"} - set(data)
        if missing:
            raise ConfigError(f"missing SystemConfig fields: {sorted(missing)}")
        return cls(**data)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def _check_positions(positions, K):
    if positions is None:
        # a compact default: BS, IRS and users spread on a 100 m scale
        positions = {"bs": [0.0, 0.0, 10.0], "irs": [80.0, 20.0, 20.0],
                     "users": [[100.0, -10.0 * k, 0.0] for k in range(K)]}
    if not isinstance(positions, dict) or not {"bs", "irs", "users"} <= set(positions):
        raise ConfigError("positions must provide 'bs', 'irs' and 'users'")
    users = positions["users"]
    if len(users) < K:
        raise ConfigError(f"positions lists {len(users)} users for K={K}")
    return {"bs": check_point(positions["bs"], "positions.bs"),
            "irs": check_point(positions["irs"], "positions.irs"),
            "users": [check_point(u, f"positions.users[{i}]") for i, u in enumerate(users)]}


@dataclass
class LinkAngles:
    """(departure, arrival) angle pairs in degrees for every LoS link."""

    bs_to_irs: tuple
    bs_to_user: list
    irs_to_user: list


@dataclass
class ChannelSet:
    """One realization: ``H_BI`` (N x M), ``H_d[k]`` (Q_k x M), ``G_H[k]`` (Q_k x N)."""

    H_BI: np.ndarray
    H_d: list
    G_H: list
    angles: Optional[LinkAngles] = None

    @property
    def K(self):
        return len(self.H_d)

    @property
    def M(self):
        return self.H_BI.shape[1]

    @property
    def N(self):
        return self.H_BI.shape[0]

    def scaled(self, c):
        return ChannelSet(c * self.H_BI, [c * H for H in self.H_d], [c * G for G in self.G_H],
                          self.angles)

    def validate(self, cfg=None):
        as_cmatrix(self.H_BI, "H_BI")
        if len(self.G_H) != self.K:
            raise ConfigError("H_d and G_H must have one entry per user")
        for k, (H, G) in enumerate(zip(self.H_d, self.G_H)):
            H = as_cmatrix(H, f"H_d[{k}]")
            G = as_cmatrix(G, f"G_H[{k}]")
            if H.shape[1] != self.M or G.shape[1] != self.N or H.shape[0] != G.shape[0]:
                raise ConfigError(f"user {k}: inconsistent channel dimensions")
        if cfg is not None:
            if (cfg.M, cfg.N, cfg.K) != (self.M, self.N, self.K) or \
                    tuple(H.shape[0] for H in self.H_d) != cfg.Q:
                raise ConfigError("channel dimensions do not match the configuration")
        return self


def steering_vector(theta, geom, d_over_lambda=None):
    """Normalized ULA response toward ``theta`` degrees (0 < theta < 180).

    Entry ``n`` (0-based) is ``exp(j 2 pi (d/lambda) n cos(theta)) / sqrt(N)``.

    Parameters
    ----------
    theta : float
        Angle from the array axis in degrees.
    geom : ArrayGeometry or int
        Array, or just its element count (spacing ``d_over_lambda``,
        default one half).
    """
    if not isinstance(geom, ArrayGeometry):
        geom = ArrayGeometry(int(geom), 0.5 if d_over_lambda is None else d_over_lambda)
    theta = float(theta)
    if not (0.0 < theta < 180.0):
        raise ConfigError(f"steering angle must lie in (0, 180) degrees, got {theta}")
    n = np.arange(geom.num_elements)
    phase = 2.0 * np.pi * geom.element_spacing_d * n * np.cos(np.deg2rad(theta))
    return np.exp(1j * phase) / np.sqrt(geom.num_elements)


def los_channel(theta_rx, theta_tx, rows, cols, geom_rx=None, geom_tx=None):
    """Rank-one LoS matrix ``h(theta_rx) h(theta_tx)^H`` of shape (rows, cols)."""
    geom_rx = geom_rx or ArrayGeometry(rows)
    geom_tx = geom_tx or ArrayGeometry(cols)
    if geom_rx.num_elements != rows or geom_tx.num_elements != cols:
        raise ConfigError("array geometries do not match the channel dimensions")
    return np.outer(steering_vector(theta_rx, geom_rx), steering_vector(theta_tx, geom_tx).conj())


def rayleigh_channel(rows, cols, rng):
    """i.i.d. CN(0, 1) entries."""
    rows, cols = check_count(rows, "rows"), check_count(cols, "cols")
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def rank_deficient_channel(rows, cols, rank, rng):
    """Sum of ``rank`` random outer products scaled to E||H||_F^2 = rows * cols."""
    rows, cols = check_count(rows, "rows"), check_count(cols, "cols")
    rank = check_count(rank, "rank")
    if rank > min(rows, cols):
        raise ConfigError(f"target rank {rank} exceeds min({rows}, {cols})")
    a = rayleigh_channel(rows, rank, rng)
    b = rayleigh_channel(cols, rank, rng)
    return (a @ b.conj().T) / np.sqrt(rank)


def pathloss_amplitude(tx_pos, rx_pos, exponent, ref_loss_dB=-30.0):
    d = float(np.linalg.norm(np.asarray(rx_pos, float) - np.asarray(tx_pos, float)))
    if d == 0.0:
        raise ConfigError("path loss undefined at zero distance")
    pl_db = ref_loss_dB - 10.0 * exponent * np.log10(d)
    return float(np.sqrt(10.0 ** (pl_db / 10.0)))


def apply_pathloss(H, tx_pos, rx_pos, exponent, ref_loss_dB=-30.0):
    """Scale ``H`` by the log-distance amplitude between two nodes."""
    return pathloss_amplitude(tx_pos, rx_pos, exponent, ref_loss_dB) * np.asarray(H)


def link_angle(from_pos, to_pos, axis_deg=90.0):
    """Angle (degrees) between a node's array axis and the direction to a peer."""
    v = np.asarray(to_pos, float) - np.asarray(from_pos, float)
    dist = np.linalg.norm(v)
    if dist == 0.0:
        raise ConfigError("coincident nodes have no link angle")
    a = np.deg2rad(axis_deg)
    cos_t = np.clip((np.cos(a) * v[0] + np.sin(a) * v[1]) / dist, -1.0, 1.0)
    return float(np.rad2deg(np.arccos(cos_t)))


def link_angles(cfg):
    """Departure/arrival angles for every link, geometry first, then overrides."""
    pos, ax = cfg.positions, cfg.array_axis_deg
    bs, irs = pos["bs"], pos["irs"]
    out = LinkAngles(
        bs_to_irs=(link_angle(bs, irs, ax), link_angle(irs, bs, ax)),
        bs_to_user=[(link_angle(bs, u, ax), link_angle(u, bs, ax)) for u in pos["users"][:cfg.K]],
        irs_to_user=[(link_angle(irs, u, ax), link_angle(u, irs, ax)) for u in pos["users"][:cfg.K]],
    )
    over = cfg.angles or {}
    if "bs_to_irs" in over:
        out.bs_to_irs = tuple(map(float, over["bs_to_irs"]))
    for key in ("bs_to_user", "irs_to_user"):
        if key in over:
            pairs = [tuple(map(float, p)) for p in over[key]]
            if len(pairs) < cfg.K:
                raise ConfigError(f"angles.{key} needs {cfg.K} entries")
            setattr(out, key, pairs[: cfg.K])
    return out


def realize_channels(cfg, rng, include_pathloss=True):
    """Draw one :class:`ChannelSet` for ``cfg``.

    Draw order is fixed (``H_BI``, then per user ``H_d[k]``, ``G_H[k]``) so
    a realization is a pure function of the configuration and the
    generator state.
    """
    regime = cfg.regime
    angles = link_angles(cfg)
    d = cfg.d_over_lambda
    arr_M, arr_N = ArrayGeometry(cfg.M, d), ArrayGeometry(cfg.N, d)
    pos, pl = cfg.positions, cfg.pathloss

    def scale(H, a, b, exponent):
        return apply_pathloss(H, a, b, exponent, pl.ref_loss_dB) if include_pathloss else H

    if regime.los_reflect:
        dep, arr = angles.bs_to_irs
        H_BI = los_channel(arr, dep, cfg.N, cfg.M, arr_N, arr_M)
    else:
        H_BI = rayleigh_channel(cfg.N, cfg.M, rng)
    H_BI = scale(H_BI, pos["bs"], pos["irs"], pl.exponent_reflect)

    H_d, G_H = [], []
    for k in range(cfg.K):
        q = cfg.Q[k]
        arr_Q = ArrayGeometry(q, d)
        if regime.los_direct:
            dep, arr = angles.bs_to_user[k]
            Hd = los_channel(arr, dep, q, cfg.M, arr_Q, arr_M)
        elif regime.name == "rank-deficient":
            Hd = rank_deficient_channel(q, cfg.M, regime.I[k], rng)
        else:
            Hd = rayleigh_channel(q, cfg.M, rng)
        if regime.los_reflect:
            dep, arr = angles.irs_to_user[k]
            G = los_channel(arr, dep, q, cfg.N, arr_Q, arr_N)
        elif regime.name == "rank-deficient":
            G = rank_deficient_channel(q, cfg.N, regime.J[k], rng)
        else:
            G = rayleigh_channel(q, cfg.N, rng)
        H_d.append(scale(Hd, pos["bs"], pos["users"][k], pl.exponent_direct))
        G_H.append(scale(G, pos["irs"], pos["users"][k], pl.exponent_reflect))
    return ChannelSet(H_BI, H_d, G_H, angles)
