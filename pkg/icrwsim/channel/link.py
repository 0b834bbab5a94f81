"""Large-scale link budget and SNR to packet-error abstraction."""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

ArrayLike = Union[float, np.ndarray]

REFERENCE_LOSS_DB = 47.86
PATHLOSS_EXPONENT = 2.5


def pathloss_db(distance: ArrayLike) -> ArrayLike:
    """Log-distance pathloss in dB.

    Distances below 1 m are clamped to 1 m.

    Args:
        distance: Transmitter-receiver distance in meters (scalar or array)

    Returns:
        Pathloss in dB, same shape as the input

    Raises:
        ValueError: If any distance is not strictly positive
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("Pathloss distance must be > 0")
    loss = REFERENCE_LOSS_DB + PATHLOSS_EXPONENT * 10.0 * np.log10(np.maximum(d, 1.0))
    if loss.ndim == 0:
        return float(loss)
    return loss


@dataclass(frozen=True)
class LinkCurve:
    """Logistic PER curve parameters; midpoints are anchored at 100 and 500 bytes."""
    slope: float = 1.0
    midpoint_100: float = 5.0
    midpoint_500: float = 7.0

    def midpoint(self, length: int) -> float:
        """Midpoint SNR for a packet length, linear in bytes through both anchors."""
        if length <= 0:
            raise ValueError(f"Packet length must be > 0, got {length}")
        return self.midpoint_100 + (self.midpoint_500 - self.midpoint_100) * (length - 100) / 400.0


def packet_error_probability(snr_db: ArrayLike, length: int, curve: LinkCurve = LinkCurve()) -> ArrayLike:
    """Probability that a packet of `length` bytes is lost at the given SNR.

    Args:
        snr_db: Signal-to-noise ratio in dB (scalar or array)
        length: Packet length in bytes
        curve: Logistic curve parameters

    Returns:
        PER = 1 / (1 + exp(slope * (snr - midpoint(length))))
    """
    per = expit(-curve.slope * (np.asarray(snr_db, dtype=float) - curve.midpoint(length)))
    if np.ndim(per) == 0:
        return float(per)
    return per


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, receiver noise floor and optional NLOS corner loss."""
    tx_power_dbm: float = 23.0
    noise_floor_dbm: float = -98.0
    nlos_extra_loss_db: float = 20.0

    def snr_db(self, distance: ArrayLike, gain_db: ArrayLike = 0.0, nlos: ArrayLike = False) -> ArrayLike:
        """SNR after pathloss, small-scale gain and (for NLOS links) the corner loss."""
        extra = np.where(np.asarray(nlos, dtype=bool), self.nlos_extra_loss_db, 0.0)
        if np.ndim(extra) == 0:
            extra = float(extra)
        return self.tx_power_dbm - pathloss_db(distance) - extra + gain_db - self.noise_floor_dbm
