"""(SNR, value) sample carriers used for every rate and error-rate sweep."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class RatePoint:
    snr_db: float
    value: float


@dataclass(frozen=True)
class RateCurve:
    """Samples sorted by SNR.

    ``axis`` is ``"gamma"`` for the per-bin SNR and ``"gamma_bar"`` for the
    frame-normalized one; ``value`` is bits per photon or a probability.
    """

    points: tuple[RatePoint, ...]
    label: str = ""
    axis: str = "gamma"
    unit: str = "bits"

    def __post_init__(self):
        snrs = [p.snr_db for p in self.points]
        if any(b < a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("RateCurve points must be sorted by snr_db")
        if self.axis not in ("gamma", "gamma_bar"):
            raise ValueError(f"unknown SNR axis {self.axis!r}")

    @classmethod
    def from_arrays(cls, snr_db: Iterable[float], values: Iterable[float], **kw) -> "RateCurve":
        pairs = sorted(zip(map(float, snr_db), map(float, values)))
        return cls(tuple(RatePoint(s, v) for s, v in pairs), **kw)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def __len__(self):
        return len(self.points)

    def snr_at(self, target: float) -> float:
        """SNR where a decreasing error curve crosses ``target`` (log-linear interpolation)."""
        snr = self.snr_db
        logv = np.log10(np.clip(self.values, 1e-300, None))
        lt = np.log10(target)
        for k in range(len(snr) - 1):
            a, b = logv[k], logv[k + 1]
            if (a - lt) * (b - lt) <= 0 and a != b:
                return float(snr[k] + (lt - a) * (snr[k + 1] - snr[k]) / (b - a))
        raise ValueError(f"curve {self.label!r} never crosses {target:g}")
