"""Binned photon-timing channel: exact information rates, reconciliation codes
and a syndrome-exchange protocol."""

from .channel import ChannelParams
from .curves import RateCurve, RatePoint

__version__ = "0.1.0"

__all__ = ["ChannelParams", "RateCurve", "RatePoint", "__version__"]
