import numpy as np
import pytest

from irs_lab.channels import SystemConfig, realize_channels, trial_rng

LOS_USERS = [[100, 0, 0], [100, 10, 0], [90, -20, 0], [110, -40, 0]]


def los_config(K=2, **kw):
    base = dict(M=16, N=16, K=K, Q=[2], P_T_dBm=30, P_I_dBm=10, sigma2_irs_dBm=-80,
                sigma2_z_dBm=-80, positions={"bs": [0, 0, 10], "irs": [80, 20, 20], "users": LOS_USERS},
                regime="LoS+LoS")
    base.update(kw)
    return SystemConfig(**base)


def rayleigh_config(K=2, **kw):
    base = dict(M=8, N=4, K=K, Q=[2], P_T_dBm=30, P_I_dBm=20, sigma2_irs_dBm=-90,
                sigma2_z_dBm=-100, regime="LoS+Rayleigh")
    base.update(kw)
    return SystemConfig(**base)


@pytest.fixture
def los_case():
    cfg = los_config()
    return cfg, realize_channels(cfg, trial_rng(0, 0, 0))


@pytest.fixture
def rayleigh_case():
    cfg = rayleigh_config()
    return cfg, realize_channels(cfg, trial_rng(0, 0, 0))


# acceptance summary: one PASS/FAIL line per criterion
_AC_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.split("::")[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_ac"):
        key = name.split("_")[1].upper()
        prev = _AC_RESULTS.get(key, True)
        _AC_RESULTS[key] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_AC_RESULTS, key=lambda k: int(k[2:])):
        terminalreporter.write_line(f"{key}: {'PASS' if _AC_RESULTS[key] else 'FAIL'}")
