"""60 GHz line-of-sight channel: log-distance path loss plus a linear
attenuation term (oxygen/rain) and a fixed urban channel factor."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 10.0
    tx_gain_dbi: float = 15.0
    path_loss_exponent: float = 2.66
    channel_att_factor_db: float = 70.0
    att_per_km_db: float = 40.0

    def __post_init__(self):
        if not self.path_loss_exponent > 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.att_per_km_db < 0:
            raise ValueError("att_per_km_db must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


TABLE_I = RadioParams()


def path_loss_db(params: RadioParams, d):
    """Loss in dB at distance ``d`` meters.

    Accepts scalars or arrays. The log term uses meters floored at 1 m; the
    attenuation slope is per kilometre of the unclamped distance.
    """
    d_arr = np.asarray(d, dtype=np.float64)
    if np.any(d_arr < 0):
        raise ValueError("distance must be non-negative")
    d_m = np.maximum(d_arr, MIN_DISTANCE_M)
    loss = (
        10.0 * params.path_loss_exponent * np.log10(d_m)
        + params.att_per_km_db * d_arr / 1000.0
        + params.channel_att_factor_db
    )
    return float(loss) if np.ndim(loss) == 0 else loss


def rss_dbm(params: RadioParams, d):
    """Received power in dBm (no receive antenna gain)."""
    return params.tx_power_dbm + params.tx_gain_dbi - path_loss_db(params, d)
