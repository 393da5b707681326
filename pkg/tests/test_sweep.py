import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsacodes.codes import lncy_code
from nsacodes.recovery import closed_form_fidelity
from nsacodes.sweep import (
    FIDELITY_HEADER,
    LOSS_HEADER,
    ConfigError,
    SweepConfig,
    cmd_sweep_fidelity,
    cmd_sweep_loss,
    detect_kinks,
    fit_power_law,
    gnuplot_script,
    kink_at,
    kink_statistic,
    loss_fits,
    quadratic_coefficient,
    sweep_loss_rows,
)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma_min": 0.0},
        {"gamma_max": 1.0},
        {"gamma_min": 0.2, "gamma_max": 0.1},
        {"points": 0},
        {"families": ["NOPE"]},
        {"window": (0.1, 0.01)},
        {"gamma0": 1.5},
        {"k": 9},
        {"workers": 0},
        {"gamma_min": 0.1, "gamma_max": 0.1, "points": 3},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        SweepConfig(**kwargs).validate()


def test_config_json():
    cfg = SweepConfig.from_json('{"points": 5, "window": [0.001, 0.01]}')
    assert cfg.points == 5 and cfg.window == (0.001, 0.01)
    with pytest.raises(ConfigError):
        SweepConfig.from_json('{"bogus": 1}')
    assert cfg.merged(points=7, n=None).points == 7


def test_grid():
    cfg = SweepConfig(points=40)
    g = cfg.grid()
    assert len(g) == 40 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(10**-0.5)
    assert np.allclose(np.diff(np.log(g)), np.diff(np.log(g))[0])
    with_g0 = SweepConfig(points=40, gamma0=10**-1.5).grid()
    assert len(with_g0) == 41 and 10**-1.5 in with_g0
    assert SweepConfig(points=1, gamma_min=0.02, gamma_max=0.02).grid() == [0.02]


@settings(max_examples=30)
@given(st.floats(0.1, 10.0), st.integers(1, 4))
def test_fit_recovers_exact_power_law(c, p):
    g = np.logspace(-3, -1.75, 12)
    rep = fit_power_law(g, c * g**p)
    assert rep.exponent == pytest.approx(p, abs=1e-10)
    assert rep.coefficient == pytest.approx(c, rel=1e-10)
    assert rep.leading_exponent == p
    assert rep.leading_coefficient == pytest.approx(c, rel=1e-8)
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)


def test_leading_coefficient_removes_higher_order_bias():
    g = np.logspace(-3, -1.75, 12)
    rep = fit_power_law(g, 3 * g**2 * (1 - 2 * g))
    assert rep.leading_coefficient == pytest.approx(3.0, rel=1e-6)
    assert abs(rep.coefficient - 3.0) > 1e-3


def test_fit_needs_points():
    with pytest.raises(ValueError):
        fit_power_law([0.001, 0.002], [1.0, 2.0])
    with pytest.raises(ValueError):
        fit_power_law([0.001, 0.002, 0.004], [1.0, 0.0, 2.0], (1e-3, 1e-2))


def test_quadratic_coefficient_of_closed_form():
    c = quadratic_coefficient(lambda g: closed_form_fidelity("NSA_SC", 4, gamma=g))
    assert c == pytest.approx(3.0, rel=1e-4)


def grid_with(g0, points=40):
    return SweepConfig(points=points, gamma0=g0).grid()


def test_kink_detected_on_broken_power_law():
    g0 = 10**-1.5
    g = np.array(grid_with(g0))
    v = np.where(g < g0, g**2, g0**2 * (g / g0) ** 4)
    located, hits = kink_at(g, v, g0)
    assert located
    assert hits == [pytest.approx(g0)]


@given(st.floats(0.5, 5.0), st.floats(0.1, 10.0))
def test_no_kink_on_smooth_power_law(p, c):
    g = np.logspace(-3, -0.5, 40)
    assert detect_kinks(g, c * g**p) == []


def test_kink_statistic_edges_are_nan():
    stat = kink_statistic(np.logspace(-3, -1, 20), np.logspace(-3, -1, 20) ** 2)
    assert np.all(np.isnan(stat[:3])) and np.all(np.isnan(stat[-3:]))
    assert np.all(np.isfinite(stat[3:-3]))


def test_no_kinks_on_adaptive_curves():
    cfg = SweepConfig(families=["NSA_SC", "NSA_PC", "LNCY"], gamma0=None)
    rows = sweep_loss_rows(cfg)
    for fam in cfg.families:
        g = [r[0] for r in rows if r[1] == fam]
        v = [r[2] for r in rows if r[1] == fam]
        assert detect_kinks(g, v) == [], fam


def test_loss_csv_is_byte_deterministic():
    cfg = SweepConfig(points=6, families=["NSA_SC", "LNCY"])
    a, b = cmd_sweep_loss(cfg), cmd_sweep_loss(cfg)
    assert a == b
    lines = a.splitlines()
    assert lines[0] == ",".join(LOSS_HEADER)
    assert len(lines) == 13
    assert lines[1].split(",")[1] == "NSA_SC"


def test_workers_give_identical_output():
    cfg = SweepConfig(points=5, families=["NSA_SC", "NSA_PC"], gamma0=0.03)
    assert cmd_sweep_loss(cfg) == cmd_sweep_loss(cfg.merged(workers=2))


def test_frozen_curves_added():
    rows = sweep_loss_rows(SweepConfig(points=4, families=["NSA_SC", "LNCY"], gamma0=0.03))
    labels = list(dict.fromkeys(r[1] for r in rows))
    assert labels == ["NSA_SC", "LNCY", "NSA_SC@gamma0"]


def test_explicit_frozen_code():
    rows = sweep_loss_rows(SweepConfig(points=3, families=[]), {"mine": lncy_code()})
    assert [r[1] for r in rows] == ["mine"] * 3


def test_lncy_loss_fit():
    rows = sweep_loss_rows(SweepConfig(families=["LNCY"]))
    (fit,) = loss_fits(rows, SweepConfig().window)
    assert fit.leading_exponent == 2
    assert fit.leading_coefficient == pytest.approx(3.0, rel=1e-3)


def test_fidelity_csv():
    cfg = SweepConfig(points=2, gamma_min=0.01, gamma_max=0.05, families=["NSA_SC", "NSA_PC"], oracle_states=100)
    text = cmd_sweep_fidelity(cfg)
    lines = text.splitlines()
    assert lines[0] == ",".join(FIDELITY_HEADER)
    for line in lines[1:]:
        cells = line.split(",")
        f_plan, f_oracle, f_cf = map(float, cells[5:8])
        assert f_plan == pytest.approx(f_oracle, abs=1e-9)
        assert f_plan == pytest.approx(f_cf, abs=1e-12)


def test_empty_families_give_header_only():
    assert cmd_sweep_loss(SweepConfig(families=[])) == ",".join(LOSS_HEADER) + "\n"


def test_single_point_grid():
    rows = sweep_loss_rows(SweepConfig(points=1, gamma_min=0.02, gamma_max=0.02, families=["LNCY"]))
    assert len(rows) == 1 and math.isclose(rows[0][0], 0.02)


def test_gnuplot_script_mentions_each_curve():
    text = gnuplot_script("loss.csv", ["NSA_SC", "LNCY"], 3, "L1")
    assert "set logscale xy" in text
    assert "'NSA_SC'" in text and "'LNCY'" in text
