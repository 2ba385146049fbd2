import numpy as np
import pytest

from oracles import hand_rss
from rsuplan.radio import TABLE_I, RadioParams, path_loss_db, rss_dbm


def test_table_values():
    assert (TABLE_I.tx_power_dbm, TABLE_I.tx_gain_dbi, TABLE_I.path_loss_exponent,
            TABLE_I.channel_att_factor_db) == (10.0, 15.0, 2.66, 70.0)


@pytest.mark.parametrize("d, want", [(100.0, -102.20), (20.0, -80.41)])
def test_reference_points(d, want):
    assert rss_dbm(TABLE_I, d) == pytest.approx(want, abs=0.01)


@pytest.mark.parametrize("d", [0.0, 0.5, 1.0, 3.7, 50.0, 333.3, 1200.0])
def test_matches_hand_formula(d):
    assert rss_dbm(TABLE_I, d) == pytest.approx(hand_rss(d), abs=1e-12)


def test_clamp_applies_to_log_term_only():
    assert path_loss_db(TABLE_I, 0.5) == pytest.approx(70.02, abs=1e-9)
    assert path_loss_db(TABLE_I, 0.0) == pytest.approx(70.0, abs=1e-12)


def test_array_input_and_monotone():
    d = np.linspace(0, 800, 401)
    r = rss_dbm(TABLE_I, d)
    assert r.shape == d.shape
    assert np.all(np.diff(r) <= 0)


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        rss_dbm(TABLE_I, -1.0)


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        RadioParams(path_loss_exponent=0)
    with pytest.raises(ValueError):
        RadioParams(att_per_km_db=-1)
