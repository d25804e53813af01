import math

import pytest
from hypothesis import given, strategies as st

from rrcguard.core import (
    AlgorithmParams,
    Centroid,
    DetectionVerdict,
    Fingerprint,
    InvalidFingerprint,
    ParamsError,
    VerdictKind,
    default_params,
)


def test_default_params_table_values():
    p = default_params()
    assert (p.eps_rssi, p.eps_ta, p.min_pts, p.t1, p.t2, p.window_ms) == (4, 1, 3, 3, 0.25, 100)


def test_default_params_tuned_values():
    p = default_params()
    assert p.t3 == 0.5
    # history capacity tuned so detection beats depletion (see README)
    assert p.history_size_m == 10
    assert (p.tau0_ms, p.tau_max_ms, p.delta_ms, p.k_reinforce) == (500, 10_000, 500, 5)


def test_defaults_validate():
    assert default_params().validate() == default_params()


@pytest.mark.parametrize("field", ["eps_rssi", "eps_ta", "min_pts", "t1", "t2", "t3",
                                   "window_ms", "history_size_m", "tau0_ms", "delta_ms",
                                   "k_reinforce"])
@pytest.mark.parametrize("value", [0, -1])
def test_non_positive_fields_rejected(field, value):
    with pytest.raises(ParamsError):
        default_params().replace(**{field: value})


@given(st.floats(min_value=1.0001, max_value=100))
def test_t2_t3_outside_unit_interval_rejected(x):
    with pytest.raises(ParamsError):
        default_params().replace(t2=x)
    with pytest.raises(ParamsError):
        default_params().replace(t3=x)


def test_tau0_above_tau_max_rejected():
    with pytest.raises(ParamsError):
        default_params().replace(tau0_ms=20_000)


def test_min_pts_below_two_rejected():
    with pytest.raises(ParamsError):
        default_params().replace(min_pts=1)


def test_params_round_trip_dict():
    p = default_params().replace(t3_mode="dynamic", eps_rssi=10)
    assert AlgorithmParams.from_dict(p.to_dict()) == p


def test_unknown_param_rejected():
    with pytest.raises(ParamsError, match="bogus"):
        AlgorithmParams.from_dict({"bogus": 1})


@pytest.mark.parametrize("ta,rssi", [(-1, -50), (31, 5), (31, -141), (31.5, -50)])
def test_fingerprint_validation(ta, rssi):
    with pytest.raises(InvalidFingerprint):
        Fingerprint(ta, rssi)


def test_centroid_must_be_finite():
    with pytest.raises(InvalidFingerprint):
        Centroid(math.nan, -40)


def test_attack_verdict_needs_centroids():
    with pytest.raises(ValueError):
        DetectionVerdict(VerdictKind.ATTACK_DETECTED)


def test_verdict_rejects_nan_ratio():
    with pytest.raises(ValueError):
        DetectionVerdict(VerdictKind.HIGH_LOAD, ratios=(math.nan, 1.0))
