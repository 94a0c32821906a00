"""Loading-space estimation from pooled moment matrices.

The span of the top-k eigenvectors of M_hat estimates the loading space;
the remaining eigenvectors span its orthogonal complement. The factor
count, when not supplied, is chosen by the eigenvalue-ratio rule

    k_hat = argmin_{1 <= k <= p/2}  lambda_{k+1} / lambda_k,

with near-zero eigenvalues floored so the ratio is never built from pure
roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailureError,
    DegenerateSpectrumError,
    InvalidKError,
)
from .moments import LaggedMomentSet, SplitSpec, pooled_moment
from .panel import TimeSeriesPanel
from .subspace import SubspaceBasis, sign_normalize_columns


@dataclass(frozen=True)
class EigenSummary:
    """Full symmetric eigen-decomposition, eigenvalues descending and >= 0."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # p x p, orthonormal columns, sign-normalized

    @property
    def p(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class LoadingEstimate:
    """Estimated loading span, its complement, and the spectrum behind them."""

    q_hat: SubspaceBasis
    b_hat: SubspaceBasis
    k: int
    eigen: EigenSummary


def eigen_decompose(mset: LaggedMomentSet) -> EigenSummary:
    """Eigen-decompose a pooled moment matrix, largest eigenvalue first."""
    try:
        lam, vec = np.linalg.eigh(mset.m_hat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(f"eigensolver failed: {exc}") from exc
    lam = lam[::-1].copy()
    vec = vec[:, ::-1]
    np.clip(lam, 0.0, None, out=lam)
    return EigenSummary(eigenvalues=lam, eigenvectors=sign_normalize_columns(vec))


def estimate_factor_count(eigen: EigenSummary) -> int:
    """Eigenvalue-ratio estimate of the factor count.

    Ratios whose denominator sits at the numerical floor are excluded from
    the argmin; ties break toward the smaller count. With p < 4 the search
    range collapses to {1}.
    """
    lam = eigen.eigenvalues
    p = eigen.p
    if p < 2:
        raise DegenerateSpectrumError("need p >= 2 to estimate a factor count")
    lam_max = lam[0]
    if lam_max <= 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero")
    floor = np.finfo(float).eps * p * lam_max
    kmax = max(1, p // 2)
    best_k = None
    best_ratio = np.inf
    for k in range(1, kmax + 1):
        den = lam[k - 1]
        if den <= floor:
            continue
        ratio = max(lam[k], floor) / den
        if ratio < best_ratio:
            best_ratio = ratio
            best_k = k
    if best_k is None:
        raise DegenerateSpectrumError(
            f"no eigenvalue above the floor {floor:.2e} in positions 1..{kmax}"
        )
    return best_k


def loading_from_eigen(eigen: EigenSummary, k: int) -> LoadingEstimate:
    """Split an eigenbasis into loading span (first k) and complement."""
    p = eigen.p
    if not 1 <= k < p:
        raise InvalidKError(f"factor count k={k} outside 1..{p - 1}")
    q_hat = SubspaceBasis(eigen.eigenvectors[:, :k])
    b_hat = SubspaceBasis(eigen.eigenvectors[:, k:])
    return LoadingEstimate(q_hat=q_hat, b_hat=b_hat, k=k, eigen=eigen)


def estimate_loading(
    panel: TimeSeriesPanel,
    split: SplitSpec,
    regime: int,
    h0: int = 1,
    k: int | None = None,
) -> LoadingEstimate:
    """Estimate the loading span of one regime under a hypothesized split.

    ``k=None`` selects the count by the eigenvalue ratio of this regime's
    own spectrum.
    """
    eigen = eigen_decompose(pooled_moment(panel, split, regime, h0))
    if k is None:
        k = estimate_factor_count(eigen)
    return loading_from_eigen(eigen, k)


def boundary_loadings(
    panel: TimeSeriesPanel,
    eta1: float,
    eta2: float,
    h0: int = 1,
    k1: int | None = None,
    k2: int | None = None,
) -> tuple[LoadingEstimate, LoadingEstimate]:
    """Loading estimates from the two boundary segments.

    Regime 1 uses t <= floor(eta1 * n), regime 2 uses t > floor(eta2 * n);
    these segments stay inside their true regimes whenever the change
    fraction lies in (eta1, eta2), so their complements are trusted
    throughout the grid search and the projection-vector choice.
    """
    est1 = estimate_loading(panel, SplitSpec.from_gamma(panel.n, eta1), 1, h0, k1)
    est2 = estimate_loading(panel, SplitSpec.from_gamma(panel.n, eta2), 2, h0, k2)
    return est1, est2
