"""Lagged cross-moment matrices per hypothesized split and their pooling.

For a split index r = floor(gamma * n), regime 1 is t in {1..r} and
regime 2 is t in {r+1..n}. The lag-h cross moment of a regime is

    Sigma_hat(h) = (1/n) * sum_t y_t y_{t+h}'   over t with t, t+h in the regime,

with the divisor n (the full sample size, not the regime length), and the
pooled matrix is M_hat = sum_{h=1..h0} Sigma_hat(h) Sigma_hat(h)'.

Accumulations run in index order with 64-bit accumulators (einsum, single
pass over t), so one accumulation is deterministic regardless of any outer
parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySumError, InvalidParamsError
from .panel import TimeSeriesPanel

MAX_LAG = 10


@dataclass(frozen=True)
class SplitSpec:
    """A hypothesized split: regime 1 = {1..r}, regime 2 = {r+1..n}."""

    n: int
    r: int

    def __post_init__(self) -> None:
        if not 1 <= self.r <= self.n:
            raise InvalidParamsError(f"split index r={self.r} outside 1..{self.n}")

    @classmethod
    def from_gamma(cls, n: int, gamma: float) -> "SplitSpec":
        if not 0.0 < gamma <= 1.0:
            raise InvalidParamsError(f"gamma={gamma} outside (0, 1]")
        # the 1e-9 nudge undoes representation error when gamma = j/n
        return cls(n=n, r=int(math.floor(gamma * n + 1e-9)))

    @property
    def gamma(self) -> float:
        return self.r / self.n


@dataclass(frozen=True)
class LaggedMomentSet:
    """The h0 cross-moment matrices of one regime and their pooled Gram sum."""

    h0: int
    regime: int
    sigma_y: tuple[np.ndarray, ...]
    m_hat: np.ndarray


def _regime_pair_slices(split: SplitSpec, regime: int, h: int) -> tuple[slice, slice]:
    """Row ranges (0-based) of the t and t+h factors of the lag-h sum."""
    if regime == 1:
        # t from 1 to r-h
        return slice(0, split.r - h), slice(h, split.r)
    # t from r+1 to n-h
    return slice(split.r, split.n - h), slice(split.r + h, split.n)


def lagged_cross_moment(
    panel: TimeSeriesPanel, split: SplitSpec, regime: int, h: int
) -> np.ndarray:
    """Lag-h cross moment of one regime, divided by the full sample size.

    Raises
    ------
    EmptySumError
        The regime holds no pair (t, t+h); degenerate splits must be
        handled by the caller rather than silently contributing zeros.
    """
    if regime not in (1, 2):
        raise InvalidParamsError(f"regime must be 1 or 2, got {regime}")
    if not 1 <= h <= MAX_LAG:
        raise InvalidParamsError(f"lag h={h} outside 1..{MAX_LAG}")
    if split.n != panel.n:
        raise InvalidParamsError("split and panel disagree on n")
    s1, s2 = _regime_pair_slices(split, regime, h)
    if s1.stop - s1.start < 1:
        raise EmptySumError(
            f"regime {regime} of split r={split.r} has no lag-{h} pairs"
        )
    y1 = panel.values[s1]
    y2 = panel.values[s2]
    return np.einsum("ti,tj->ij", y1, y2) / panel.n


def pooled_moment(
    panel: TimeSeriesPanel, split: SplitSpec, regime: int, h0: int
) -> LaggedMomentSet:
    """Pool lags 1..h0 into the symmetric nonnegative-definite M_hat."""
    if not 1 <= h0 <= MAX_LAG:
        raise InvalidParamsError(f"h0={h0} outside 1..{MAX_LAG}")
    sigmas = tuple(lagged_cross_moment(panel, split, regime, h) for h in range(1, h0 + 1))
    m = np.zeros((panel.p, panel.p))
    for s in sigmas:
        m += s @ s.T
    m = 0.5 * (m + m.T)
    return LaggedMomentSet(h0=h0, regime=regime, sigma_y=sigmas, m_hat=m)
