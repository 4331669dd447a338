"""Active-IRS multi-user MIMO: DoF bounds, closed-form beamformers and sweeps."""

from .beamformers import (BeamformerSolution, ReflectionMatrix, mmse_receiver, nsp_mtp_mrp,
                          so_mmse, tll_mmse, tll_phase_budget, zf_baseline)
from .channels import (ArrayGeometry, ChannelSet, PathLoss, Regime, SystemConfig,
                       apply_pathloss, los_channel, rank_deficient_channel, rayleigh_channel,
                       realize_channels, steering_vector)
from .dof import DofReport, dof_report, dof_upper_bound, effective_channel, oc_angle, verify_doubling
from .exceptions import *  # noqa: F401,F403
from .metrics import RateReport, evaluate, rate_det, rate_sinr, snr_per_stream

__version__ = "0.1.0"

# estimators pull in scikit-learn; load them on first use so the CLI starts fast
_ESTIMATORS = ("METHODS", "NSPMTPMRP", "SOMMSE", "TLLMMSE", "ZFBaseline", "make_estimator")


def __getattr__(name):
    if name in _ESTIMATORS:
        from . import estimators
        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
