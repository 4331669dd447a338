import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import los_config, rayleigh_config
from irs_lab.beamformers import tll_mmse
from irs_lab.channels import realize_channels, trial_rng
from irs_lab.estimators import METHODS, NSPMTPMRP, SOMMSE, TLLMMSE, ZFBaseline, make_estimator
from irs_lab.exceptions import ConfigError
from irs_lab.metrics import evaluate


def test_params_and_clone():
    cfg = rayleigh_config()
    est = TLLMMSE(config=cfg, use_irs=False)
    assert est.get_params() == {"config": cfg, "use_irs": False, "leakage": "closed-form"}
    twin = clone(est)
    assert twin.get_params()["use_irs"] is False and twin is not est
    est.set_params(use_irs=True)
    assert est.use_irs


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        ZFBaseline(config=rayleigh_config()).score()


def test_fit_score_matches_functional(rayleigh_case):
    cfg, ch = rayleigh_case
    est = TLLMMSE(config=cfg).fit(ch)
    assert est.score() == pytest.approx(evaluate(tll_mmse(ch, cfg), ch, cfg).sum_rate, rel=1e-12)
    assert est.transform() is est.solution_
    other = realize_channels(cfg, trial_rng(9, 0, 0))
    assert est.predict(other).sum_rate >= 0


@pytest.mark.parametrize("cls,tag", [(NSPMTPMRP, "NSP-MTP-MRP"), (SOMMSE, "SO-MMSE")])
def test_los_estimators(cls, tag, los_case):
    cfg, ch = los_case
    est = cls(config=cfg).fit(ch)
    assert est.solution_.method_tag == tag and est.solution_.use_irs
    assert est.score() > 0
    assert est.score() == pytest.approx(sum(est.predict().per_user_rate))


def test_make_estimator_and_errors(los_case):
    cfg, ch = los_case
    assert set(METHODS) == {"TLL-MMSE", "NSP-MTP-MRP", "SO-MMSE", "ZF-baseline"}
    assert isinstance(make_estimator("SO-MMSE", cfg), SOMMSE)
    with pytest.raises(ConfigError):
        make_estimator("MRT", cfg)
    with pytest.raises(ConfigError):
        SOMMSE(config=None).fit(ch)
    with pytest.raises(ConfigError):
        SOMMSE(config=cfg).fit("not channels")
    with pytest.raises(ConfigError):
        SOMMSE(config=los_config(K=3)).fit(ch)
