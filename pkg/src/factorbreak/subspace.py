"""Orthonormal-basis algebra: span distance, sign convention, complements.

The distance between column spans is

    D(S1, S2) = sqrt(1 - tr(O1 O1' O2 O2') / min(q1, q2))

computed through the singular values of ``O1' O2`` (algebraically identical
to the trace form, better conditioned). It is 0 when one span contains the
other and 1 when the spans are orthogonal.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, FullSpaceError, NotOrthonormalError

ORTHONORMAL_TOL = 1e-10


def sign_normalize_columns(matrix: np.ndarray) -> np.ndarray:
    """Flip column signs so each column sum is positive.

    Columns with exactly zero sum (possible on symmetric synthetic data)
    fall back to making the entry of largest magnitude positive, first such
    entry on magnitude ties, so the output is deterministic.
    """
    out = np.array(matrix, dtype=np.float64, copy=True)
    sums = out.sum(axis=0)
    for j in range(out.shape[1]):
        s = sums[j]
        if s == 0.0:
            lead = int(np.argmax(np.abs(out[:, j])))
            s = out[lead, j]
        if s < 0.0:
            out[:, j] = -out[:, j]
    return out


class SubspaceBasis:
    """A ``p x q`` matrix with orthonormal, sign-normalized columns."""

    __slots__ = ("basis",)

    def __init__(self, basis: np.ndarray):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim == 1:
            basis = basis[:, None]
        p, q = basis.shape
        if not 1 <= q <= p:
            raise NotOrthonormalError(f"need 1 <= q <= p, got shape {basis.shape}")
        gram = basis.T @ basis
        defect = np.abs(gram - np.eye(q)).max()
        if defect > ORTHONORMAL_TOL:
            raise NotOrthonormalError(
                f"columns not orthonormal: max defect {defect:.2e} > {ORTHONORMAL_TOL:.0e}"
            )
        basis = sign_normalize_columns(basis)
        basis.setflags(write=False)
        self.basis = basis

    @property
    def p(self) -> int:
        return self.basis.shape[0]

    @property
    def q(self) -> int:
        return self.basis.shape[1]

    def __repr__(self) -> str:
        return f"SubspaceBasis(p={self.p}, q={self.q})"


def normalize_signs(basis: np.ndarray) -> SubspaceBasis:
    """Wrap an orthonormal matrix as a basis, enforcing the sign convention."""
    return SubspaceBasis(basis)


def subspace_distance(s1: SubspaceBasis, s2: SubspaceBasis) -> float:
    """Distance in [0, 1] between the column spans of two bases."""
    if s1.p != s2.p:
        raise DimensionMismatchError(f"ambient dimensions differ: {s1.p} vs {s2.p}")
    sv = scipy.linalg.svd(s1.basis.T @ s2.basis, compute_uv=False)
    radicand = 1.0 - (sv * sv).sum() / min(s1.q, s2.q)
    # roundoff can push the radicand up to ~1e-10 outside [0, 1]
    return float(np.sqrt(min(max(radicand, 0.0), 1.0)))


def orthogonal_complement(basis: SubspaceBasis) -> SubspaceBasis:
    """Orthonormal basis of the orthogonal complement of ``span(basis)``."""
    if basis.q >= basis.p:
        raise FullSpaceError("complement of a full-dimensional span is empty")
    comp = scipy.linalg.null_space(basis.basis.T)
    return SubspaceBasis(comp)
