"""Synthetic panels with a possible break in the factor loading structure.

Loadings are i.i.d. uniform on [-p^(-delta/2), p^(-delta/2)], so delta
tunes the factor strength from strong (0) to weak. Factors are independent
AR(1) chains; the noise is Gaussian with an equicorrelated covariance
(unit diagonal, rho_e everywhere else), the device that produces strong
cross-sectional dependence. Every random ingredient draws from its own
named stream, so panels are reproducible piecewise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import rng as _rng
from .errors import InvalidSpecError
from .panel import TimeSeriesPanel

BURN_IN = 200  # enough for |phi| <= 0.9 to forget the zero start
DEFAULT_AR_COEFFS = (0.9, -0.7, 0.8)
DEFAULT_FACTOR_SD = 2.0


@dataclass(frozen=True)
class DgpSpec:
    """Full description of one simulated panel."""

    n: int
    p: int
    k1: int = 3
    k2: int = 3
    delta1: float = 0.0
    delta2: float = 0.0
    gamma0: float | None = 0.5
    rho_e: float = 0.5
    ar_coeffs: tuple[float, ...] = DEFAULT_AR_COEFFS
    factor_noise_sd: float = DEFAULT_FACTOR_SD
    seed: _rng.Seed = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.p < 1:
            raise InvalidSpecError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if self.k1 < 1 or self.k2 < 1:
            raise InvalidSpecError("factor counts must be at least 1")
        if not 0.0 <= self.delta1 <= 1.0 or not 0.0 <= self.delta2 <= 1.0:
            raise InvalidSpecError("factor strengths must lie in [0, 1]")
        if self.gamma0 is not None and not 0.0 < self.gamma0 < 1.0:
            raise InvalidSpecError(f"gamma0={self.gamma0} outside (0, 1)")
        if not 0.0 <= self.rho_e < 1.0:
            raise InvalidSpecError(f"rho_e={self.rho_e} outside [0, 1)")
        if len(self.ar_coeffs) < max(self.k1, self.k2):
            raise InvalidSpecError(
                f"need at least {max(self.k1, self.k2)} AR coefficients"
            )
        if any(abs(phi) >= 1.0 for phi in self.ar_coeffs):
            raise InvalidSpecError("AR coefficients must satisfy |phi| < 1")
        if self.factor_noise_sd <= 0.0:
            raise InvalidSpecError("factor innovation sd must be positive")


@dataclass(frozen=True)
class DgpTruth:
    """Ground truth retained for oracle evaluation of estimators."""

    a1: np.ndarray
    a2: np.ndarray | None
    gamma0: float | None
    r0: int | None
    factors1: np.ndarray
    factors2: np.ndarray | None
    noise: np.ndarray
    spec: DgpSpec = field(repr=False, default=None)


def _ar1_paths(gen: np.random.Generator, k: int, m: int, spec: DgpSpec) -> np.ndarray:
    innov = spec.factor_noise_sd * gen.standard_normal((BURN_IN + m, k))
    out = np.empty_like(innov)
    for j in range(k):
        out[:, j] = lfilter([1.0], [1.0, -spec.ar_coeffs[j]], innov[:, j])
    return out[BURN_IN:]


def generate(spec: DgpSpec) -> tuple[TimeSeriesPanel, DgpTruth]:
    """Draw one panel and its ground truth from the specification."""
    half_width1 = spec.p ** (-spec.delta1 / 2)
    gen_a1 = _rng.stream(spec.seed, _rng.LOADINGS_1)
    a1 = gen_a1.uniform(-half_width1, half_width1, size=(spec.p, spec.k1))
    x1 = _ar1_paths(_rng.stream(spec.seed, _rng.FACTORS_1), spec.k1, spec.n, spec)

    # exact equicorrelation sample: sqrt(1-rho) w + sqrt(rho) g 1, O(p) a step
    gen_e = _rng.stream(spec.seed, _rng.NOISE)
    w = gen_e.standard_normal((spec.n, spec.p))
    shared = gen_e.standard_normal(spec.n)
    noise = np.sqrt(1.0 - spec.rho_e) * w + np.sqrt(spec.rho_e) * shared[:, None]

    if spec.gamma0 is None:
        y = x1 @ a1.T + noise
        truth = DgpTruth(
            a1=a1, a2=None, gamma0=None, r0=None,
            factors1=x1, factors2=None, noise=noise, spec=spec,
        )
        return TimeSeriesPanel(y), truth

    r0 = int(np.floor(spec.gamma0 * spec.n + 1e-9))
    half_width2 = spec.p ** (-spec.delta2 / 2)
    gen_a2 = _rng.stream(spec.seed, _rng.LOADINGS_2)
    a2 = gen_a2.uniform(-half_width2, half_width2, size=(spec.p, spec.k2))
    x2 = _ar1_paths(_rng.stream(spec.seed, _rng.FACTORS_2), spec.k2, spec.n, spec)
    y = np.empty((spec.n, spec.p))
    y[:r0] = x1[:r0] @ a1.T + noise[:r0]
    y[r0:] = x2[r0:] @ a2.T + noise[r0:]
    truth = DgpTruth(
        a1=a1, a2=a2, gamma0=spec.gamma0, r0=r0,
        factors1=x1, factors2=x2, noise=noise, spec=spec,
    )
    return TimeSeriesPanel(y), truth
