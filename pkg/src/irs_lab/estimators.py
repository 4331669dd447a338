"""Scikit-learn style wrappers around the beamforming solvers.

Each estimator is configured with a :class:`SystemConfig`, fitted on a
:class:`ChannelSet` and scored by the sum-rate it achieves::

    est = TLLMMSE(config=cfg).fit(channels)
    est.score(channels)        # bits/s/Hz
    est.predict(channels)      # RateReport

The channel set plays the role of ``X``; there is no target.
"""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .beamformers import nsp_mtp_mrp, so_mmse, tll_mmse, zf_baseline
from .channels import ChannelSet, SystemConfig
from .exceptions import ConfigError
from .metrics import evaluate


class _BeamformerEstimator(BaseEstimator):
    _solver = None

    def __init__(self, config=None, use_irs=True, leakage="closed-form"):
        self.config = config
        self.use_irs = use_irs
        self.leakage = leakage

    def _check_inputs(self, channels):
        if not isinstance(self.config, SystemConfig):
            raise ConfigError("config must be a SystemConfig")
        if not isinstance(channels, ChannelSet):
            raise ConfigError("fit expects a ChannelSet")
        return channels.validate(self.config)

    def fit(self, channels, y=None):
        channels = self._check_inputs(channels)
        self.solution_ = type(self)._solver(channels, self.config, use_irs=self.use_irs)
        self.channels_ = channels
        return self

    def transform(self, channels=None):
        """The fitted :class:`BeamformerSolution`."""
        check_is_fitted(self, "solution_")
        return self.solution_

    def predict(self, channels=None):
        """Rate report of the fitted beamformers on ``channels`` (default: the fit data)."""
        check_is_fitted(self, "solution_")
        channels = self.channels_ if channels is None else self._check_inputs(channels)
        return evaluate(self.solution_, channels, self.config, leakage=self.leakage)

    def score(self, channels=None, y=None):
        return self.predict(channels).sum_rate


class TLLMMSE(_BeamformerEstimator):
    """Split-surface leakage design with MMSE receivers."""

    _solver = staticmethod(tll_mmse)


class NSPMTPMRP(_BeamformerEstimator):
    """Null-space transmit, max receive power, phase alignment."""

    _solver = staticmethod(nsp_mtp_mrp)


class SOMMSE(_BeamformerEstimator):
    """Sequential orthogonalization with a Rayleigh-Ritz phase and MMSE receivers."""

    _solver = staticmethod(so_mmse)


class ZFBaseline(_BeamformerEstimator):
    """Zero-forcing transmit, matched-filter receive."""

    _solver = staticmethod(zf_baseline)


METHODS = {
    "TLL-MMSE": TLLMMSE,
    "NSP-MTP-MRP": NSPMTPMRP,
    "SO-MMSE": SOMMSE,
    "ZF-baseline": ZFBaseline,
}


def make_estimator(method, config, use_irs=True, leakage="closed-form"):
    try:
        cls = METHODS[method]
    except KeyError:
        raise ConfigError(f"unknown method {method!r}; expected one of {sorted(METHODS)}") from None
    return cls(config=config, use_irs=use_irs, leakage=leakage)
