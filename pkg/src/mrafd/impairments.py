"""Additive transmitter/receiver noise settings shared by training and OFDM links."""

from __future__ import annotations

import math
from dataclasses import dataclass


def dbm_to_mw(dbm: float) -> float:
    return 0.0 if dbm == -math.inf else 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return -math.inf if mw <= 0 else 10.0 * math.log10(mw)


@dataclass(frozen=True)
class ImpairmentConfig:
    """Transmit power and additive noise levels.

    ``tx_noise_dbc`` scales white transmitter noise to the node's transmit
    power; ``rx_noise_floor_dbm`` is the absolute receiver noise power.
    Use ``-inf`` for either to switch that noise off.
    """

    tx_power_dbm: float = 5.0
    tx_noise_dbc: float = -40.0
    rx_noise_floor_dbm: float = -90.0

    def __post_init__(self):
        if not self.tx_noise_dbc < 0:
            raise ValueError(f"tx_noise_dbc must be negative, got {self.tx_noise_dbc}")

    @property
    def tx_power_mw(self) -> float:
        return dbm_to_mw(self.tx_power_dbm)

    @property
    def tx_noise_mw(self) -> float:
        if self.tx_noise_dbc == -math.inf:
            return 0.0
        return self.tx_power_mw * 10.0 ** (self.tx_noise_dbc / 10.0)

    @property
    def rx_noise_mw(self) -> float:
        return dbm_to_mw(self.rx_noise_floor_dbm)


NOISELESS = ImpairmentConfig(tx_power_dbm=0.0, tx_noise_dbc=-math.inf, rx_noise_floor_dbm=-math.inf)
