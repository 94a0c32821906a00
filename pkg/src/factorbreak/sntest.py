"""Self-normalized test for the existence of a change point.

The panel is projected onto a data-driven direction b taken from the
complement of one boundary regime's loading span; a change in factor
structure then shows up as a variance break in z_t = b' y_t. The CUSUM-type
contrast of windowed variances is divided by a recursive self-normalizer,
which makes the null limit pivotal no matter how strong the cross-sectional
noise dependence is, and critical values come from simulating that limit:

    sup_{s in (eta1, eta2)}  {B(s) - s B(1)}^2 / W(B, s)

for a standard Brownian motion B, with W the matching integrals of squared
bridge-like contrasts on [0, s] and [s, 1].
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as _rng
from .errors import (
    DegenerateNormalizerError,
    FactorBreakError,
    InvalidParamsError,
    WindowTooShortError,
)
from .loading import LoadingEstimate, boundary_loadings
from .locate import locate_change_point
from .panel import FractionGrid, TimeSeriesPanel
from .subspace import sign_normalize_columns

SCHEMA_VERSION = 1
DEFAULT_GRID_SIZE = 2000
DEFAULT_REPLICATIONS = 50_000
DEFAULT_CV_SEED = 1729
DEFAULT_ALPHAS = (0.10, 0.05, 0.01)


@dataclass(frozen=True)
class ProjectedSeries:
    """A panel reduced to z_t = b' y_t for a unit projection vector b."""

    z: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        if abs(np.linalg.norm(self.b) - 1.0) > 1e-10:
            raise InvalidParamsError("projection vector must have unit norm")
        if not np.all(np.isfinite(self.z)):
            raise InvalidParamsError("projected series contains non-finite values")


@dataclass(frozen=True)
class SnTestResult:
    """Test statistic, decision ingredients, and the projection used."""

    t_n: float
    argmax_r: int
    b: np.ndarray
    b_source: int
    critical_values: dict[float, float]
    p_value: float
    reject: dict[float, bool]
    eta1: float
    eta2: float

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "t_n": self.t_n,
            "argmax_r": self.argmax_r,
            "b_source": self.b_source,
            "p_value": self.p_value,
            "critical_values": {f"{a:g}": cv for a, cv in self.critical_values.items()},
            "reject": {f"{a:g}": bool(r) for a, r in self.reject.items()},
            "eta1": self.eta1,
            "eta2": self.eta2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def window_variance(z: np.ndarray, i: int, j: int) -> float:
    """Sample variance of z over the 1-based inclusive window [i, j].

    Mean of squares minus squared mean over the j - i + 1 points, clamped
    at zero when roundoff turns it slightly negative.
    """
    n = z.shape[0]
    if not 1 <= i <= j <= n:
        raise InvalidParamsError(f"window [{i}, {j}] outside 1..{n}")
    if j == i:
        raise WindowTooShortError("variance window needs at least two points")
    w = z[i - 1 : j]
    m1 = w.mean()
    m2 = (w * w).mean()
    return max(m2 - m1 * m1, 0.0)


def _candidate_range(n: int, eta1: float, eta2: float) -> tuple[int, int]:
    """Integer r with eta1 < r/n < eta2, guarding representation error."""
    lo = int(math.floor(n * eta1 + 1e-9)) + 1
    hi = int(math.ceil(n * eta2 - 1e-9)) - 1
    return lo, hi


def sn_statistic(z: np.ndarray, eta1: float, eta2: float) -> tuple[float, int]:
    """Maximal self-normalized variance contrast and its arg-max split.

    At each candidate r the numerator is the squared scaled contrast of
    variances before and after r, and the normalizer aggregates the same
    contrasts recursively inside each side. Inner windows with fewer than
    two points contribute nothing. The whole computation runs on prefix
    sums of z and z^2, quadratic cost in n overall.

    Raises
    ------
    DegenerateNormalizerError
        The normalizer vanishes at some candidate (z piecewise constant on
        the relevant windows), which leaves the ratio undefined.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not (0.0 < eta1 < eta2 < 1.0):
        raise InvalidParamsError("need 0 < eta1 < eta2 < 1")
    rlo, rhi = _candidate_range(n, eta1, eta2)
    if rlo > rhi:
        raise InvalidParamsError(f"no candidate split in ({eta1}, {eta2}) for n={n}")
    if rlo < 2 or rhi > n - 2:
        raise InvalidParamsError(f"series too short for trimming ({eta1}, {eta2})")
    # centering leaves every window variance unchanged but removes the
    # large common term from the prefix sums (shift robustness)
    z = z - z.mean()
    p1 = np.concatenate(([0.0], np.cumsum(z)))
    p2 = np.concatenate(([0.0], np.cumsum(z * z)))

    def var_span(a, b):
        # windows [a, b], 1-based inclusive, as arrays; caller masks b >= a
        ln = b - a + 1
        m1 = (p1[b] - p1[a - 1]) / ln
        m2 = (p2[b] - p2[a - 1]) / ln
        return m2 - m1 * m1

    r = np.arange(rlo, rhi + 1)
    i = np.arange(1, n + 1)[:, None]
    iv = i[:, 0]
    nu_head = var_span(np.ones(n, dtype=np.int64), iv)  # [1, i]
    nu_tail = var_span(iv, np.full(n, n, dtype=np.int64))  # [i, n]

    rr = r[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        nu_fwd = var_span(i + 1, np.broadcast_to(rr, (n, r.size)))  # [i+1, r]
        nu_bwd = var_span(np.broadcast_to(rr + 1, (n, r.size)), i - 1)  # [r+1, i-1]
    fwd = np.where(
        (i >= 2) & (i <= rr - 2),
        ((i * (rr - i)) / rr) ** 2 * (nu_head[:, None] - nu_fwd) ** 2,
        0.0,
    ).sum(axis=0)
    bwd = np.where(
        (i >= rr + 3) & (i <= n - 1),
        (((i - rr - 1) * (n - i + 1)) / (n - rr)) ** 2
        * (nu_bwd - nu_tail[:, None]) ** 2,
        0.0,
    ).sum(axis=0)
    normalizer = (fwd + bwd) / n
    contrast = nu_head[r - 1] - var_span(r + 1, np.full(r.size, n, dtype=np.int64))
    numerator = (r * (n - r) * contrast) ** 2 / (n * n)
    bad = normalizer <= 0.0
    if np.any(bad):
        r_bad = int(r[np.argmax(bad)])
        raise DegenerateNormalizerError(
            f"self-normalizer vanished at candidate r={r_bad}"
        )
    stats = numerator / normalizer
    j = int(np.argmax(stats))
    return float(stats[j]), int(r[j])


def choose_projection(
    panel: TimeSeriesPanel,
    eta1: float = 0.1,
    eta2: float = 0.9,
    h0: int = 1,
    k1: int | None = None,
    k2: int | None = None,
    boundary: tuple[LoadingEstimate, LoadingEstimate] | None = None,
) -> tuple[np.ndarray, int]:
    """Pick the unit projection vector from the boundary complements.

    The vector lives in the complement of the regime whose pooled moment
    matrix carries more spectral mass (the likely-stronger side) and, within
    that complement, is the direction least explained by the other side's
    complement, i.e. the right singular vector of the cross product with
    the smallest singular value. That direction is the one a post-change
    loading span would energize most, which is what powers the variance
    test; its sign is canonicalized for bit-identical reruns.
    """
    if boundary is None:
        boundary = boundary_loadings(panel, eta1, eta2, h0, k1, k2)
    est1, est2 = boundary
    if est2.eigen.eigenvalues[0] > est1.eigen.eigenvalues[0]:
        host, other, source = est2, est1, 2
    else:
        host, other, source = est1, est2, 1
    _, _, vt = np.linalg.svd(other.b_hat.basis.T @ host.b_hat.basis)
    b = host.b_hat.basis @ vt[-1]
    b = sign_normalize_columns(b[:, None])[:, 0]
    return b / np.linalg.norm(b), source


# ---------------------------------------------------------------------------
# critical values


@dataclass(frozen=True)
class CriticalValueTable:
    """Simulated upper quantiles of the pivotal limit, plus the raw draws."""

    eta1: float
    eta2: float
    grid_size: int
    replications: int
    seed: int
    quantiles: dict[float, float]
    draws: np.ndarray  # sorted ascending

    def cv(self, alpha: float) -> float:
        for a, v in self.quantiles.items():
            if abs(a - alpha) < 1e-12:
                return v
        if not 0.0 < alpha < 1.0:
            raise InvalidParamsError(f"alpha={alpha} outside (0, 1)")
        return float(np.quantile(self.draws, 1.0 - alpha))

    def p_value(self, t: float) -> float:
        # exact Monte Carlo p-value, monotone with quantile rejection
        exceed = self.draws.size - np.searchsorted(self.draws, t, side="left")
        return float((1 + exceed) / (self.replications + 1))

    def save(self, path: str) -> None:
        path = Path(path)
        raw = self.draws.astype("<f8").tobytes()
        digest = hashlib.sha256(raw).hexdigest()
        sidecar = path.with_suffix(path.suffix + ".draws.bin")
        sidecar.write_bytes(raw)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "grid_size": self.grid_size,
            "replications": self.replications,
            "seed": self.seed,
            "quantiles": {f"{a:g}": v for a, v in self.quantiles.items()},
            "draws_digest": digest,
            "draws_file": sidecar.name,
        }
        path.write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path: str) -> "CriticalValueTable":
        path = Path(path)
        payload = json.loads(path.read_text())
        sidecar = path.parent / payload["draws_file"]
        raw = sidecar.read_bytes()
        if hashlib.sha256(raw).hexdigest() != payload["draws_digest"]:
            raise InvalidParamsError(f"draw sidecar {sidecar} fails its digest")
        draws = np.frombuffer(raw, dtype="<f8")
        return cls(
            eta1=payload["eta1"],
            eta2=payload["eta2"],
            grid_size=payload["grid_size"],
            replications=payload["replications"],
            seed=payload["seed"],
            quantiles={float(a): v for a, v in payload["quantiles"].items()},
            draws=draws,
        )


def simulate_critical_values(
    eta1: float = 0.1,
    eta2: float = 0.9,
    grid_size: int = DEFAULT_GRID_SIZE,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_CV_SEED,
) -> CriticalValueTable:
    """Simulate the limit law on a uniform grid and tabulate its quantiles.

    Brownian paths are partial sums of i.i.d. normals; the sup and both
    integrals are discretized on the same grid. Doubling the default grid
    moves the 5% quantile by well under 2%.
    """
    if grid_size < 200:
        raise InvalidParamsError("grid_size must be at least 200")
    if replications < 10_000:
        raise InvalidParamsError("replications must be at least 10000")
    if not (0.0 < eta1 < eta2 < 1.0):
        raise InvalidParamsError("need 0 < eta1 < eta2 < 1")
    gen = _rng.stream(seed, _rng.CRITICAL_VALUES)
    g = grid_size
    u = np.arange(1, g + 1) / g
    lo, hi = _candidate_range(g, eta1, eta2)
    sidx = np.arange(lo - 1, hi)  # 0-based positions of grid points s
    s = u[sidx]
    cu2 = np.cumsum(u * u) / g
    sw2 = np.cumsum((1.0 - u)[::-1] ** 2)[::-1] / g
    draws = np.empty(replications)
    done = 0
    chunk = max(1, min(2048, int(64e6 // (8 * g))))
    while done < replications:
        m = min(chunk, replications - done)
        steps = gen.standard_normal((m, g)) / np.sqrt(g)
        bm = np.cumsum(steps, axis=1)
        b1 = bm[:, -1:]
        bs = bm[:, sidx]
        numer = (bs - s[None, :] * b1) ** 2
        # W = int_0^s {B(u) - (u/s) B(s)}^2 du
        #   + int_s^1 [B(1)-B(u) - (1-u)/(1-s) {B(1)-B(s)}]^2 du
        cb2 = np.cumsum(bm * bm, axis=1) / g
        cub = np.cumsum(u[None, :] * bm, axis=1) / g
        ratio = bs / s[None, :]
        left = cb2[:, sidx] - 2.0 * ratio * cub[:, sidx] + ratio * ratio * cu2[sidx]
        tail = b1 - bm
        sc2 = np.cumsum((tail * tail)[:, ::-1], axis=1)[:, ::-1] / g
        swc = np.cumsum(((1.0 - u)[None, :] * tail)[:, ::-1], axis=1)[:, ::-1] / g
        cs = b1 - bs
        scale = cs / (1.0 - s)[None, :]
        nxt = sidx + 1
        ok = nxt < g  # the u = 1 endpoint contributes zero anyway
        right = np.zeros_like(left)
        right[:, ok] = (
            sc2[:, nxt[ok]]
            - 2.0 * scale[:, ok] * swc[:, nxt[ok]]
            + scale[:, ok] ** 2 * sw2[nxt[ok]][None, :]
        )
        draws[done : done + m] = np.max(numer / (left + right), axis=1)
        done += m
    draws.sort()
    quantiles = {a: float(np.quantile(draws, 1.0 - a)) for a in DEFAULT_ALPHAS}
    return CriticalValueTable(
        eta1=eta1,
        eta2=eta2,
        grid_size=grid_size,
        replications=replications,
        seed=seed,
        quantiles=quantiles,
        draws=draws,
    )


def default_cache_dir() -> Path:
    env = os.environ.get("FACTORBREAK_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "factorbreak"


def get_critical_values(
    eta1: float = 0.1,
    eta2: float = 0.9,
    grid_size: int = DEFAULT_GRID_SIZE,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_CV_SEED,
    cache_dir: str | None = None,
) -> CriticalValueTable:
    """Fetch a critical-value table, simulating and caching on first use."""
    root = Path(cache_dir) if cache_dir else default_cache_dir()
    name = f"cv_{eta1:g}_{eta2:g}_g{grid_size}_r{replications}_s{seed}.json"
    path = root / name
    if path.exists():
        try:
            return CriticalValueTable.load(str(path))
        except (OSError, KeyError, ValueError, FactorBreakError):
            pass  # stale or corrupt cache entry: resimulate below
    table = simulate_critical_values(eta1, eta2, grid_size, replications, seed)
    root.mkdir(parents=True, exist_ok=True)
    table.save(str(path))
    return table


# ---------------------------------------------------------------------------
# the test and its segmentation wrapper


def test_change_point(
    panel: TimeSeriesPanel,
    eta1: float = 0.1,
    eta2: float = 0.9,
    h0: int = 1,
    k1: int | None = None,
    k2: int | None = None,
    cv_table: CriticalValueTable | None = None,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    boundary: tuple[LoadingEstimate, LoadingEstimate] | None = None,
) -> SnTestResult:
    """Test whether the factor structure breaks anywhere in (eta1, eta2)."""
    if cv_table is None:
        cv_table = get_critical_values(eta1, eta2)
    if abs(cv_table.eta1 - eta1) > 1e-12 or abs(cv_table.eta2 - eta2) > 1e-12:
        raise InvalidParamsError(
            "critical-value table was simulated for different trimming fractions"
        )
    b, source = choose_projection(panel, eta1, eta2, h0, k1, k2, boundary)
    series = ProjectedSeries(z=panel.values @ b, b=b)
    t_n, r = sn_statistic(series.z, eta1, eta2)
    cvs = {a: cv_table.cv(a) for a in alphas}
    return SnTestResult(
        t_n=t_n,
        argmax_r=r,
        b=b,
        b_source=source,
        critical_values=cvs,
        p_value=cv_table.p_value(t_n),
        reject={a: t_n > cv for a, cv in cvs.items()},
        eta1=eta1,
        eta2=eta2,
    )


def _min_testable_length(eta1: float, eta2: float, h0: int) -> int:
    # boundary segments must hold at least one lag-h0 pair, and the
    # candidate range must be non-empty with two-point outer windows
    need1 = int(math.ceil((h0 + 1) / eta1))
    need2 = int(math.ceil((h0 + 1) / (1.0 - eta2)))
    return max(need1, need2, int(math.ceil(2.0 / eta1)) + 2, 8)


def segment_multiple(
    panel: TimeSeriesPanel,
    eta1: float = 0.1,
    eta2: float = 0.9,
    h0: int = 1,
    alpha: float = 0.05,
    num_intervals: int = 100,
    min_len: int = 60,
    seed: int = 0,
    cv_table: CriticalValueTable | None = None,
) -> list[float]:
    """Wild-binary-segmentation sweep for multiple change points.

    Each segment is tested at level ``alpha`` (unadjusted down the
    recursion); on rejection the split is located on the drawn sub-interval
    with the largest rejecting statistic (the segment itself competes too),
    and both sides recurse. Returned change points are fractions of the
    original sample, sorted ascending.
    """
    if num_intervals < 1:
        raise InvalidParamsError("num_intervals must be at least 1")
    floor_len = int(math.ceil(20.0 / (eta2 - eta1)))
    if min_len < floor_len:
        raise InvalidParamsError(
            f"min_len={min_len} below the floor {floor_len} for trimming "
            f"({eta1}, {eta2})"
        )
    if cv_table is None:
        cv_table = get_critical_values(eta1, eta2)
    gen = _rng.stream(seed, _rng.SEGMENTS)
    n = panel.n
    shortest = max(min_len, _min_testable_length(eta1, eta2, h0))
    found: list[int] = []

    def visit(lo: int, hi: int) -> None:
        m = hi - lo
        if m < shortest:
            return
        sub = TimeSeriesPanel(panel.values[lo:hi])
        gate = test_change_point(
            sub, eta1, eta2, h0, cv_table=cv_table, alphas=(alpha,)
        )
        if not gate.reject[alpha]:
            return
        best = (gate.t_n, lo, hi)
        for _ in range(num_intervals):
            if m <= min_len:
                break
            a = int(gen.integers(lo, hi - min_len + 1))
            b = int(gen.integers(a + min_len, hi + 1))
            if b - a < shortest:
                continue
            piece = TimeSeriesPanel(panel.values[a:b])
            try:
                res = test_change_point(
                    piece, eta1, eta2, h0, cv_table=cv_table, alphas=(alpha,)
                )
            except FactorBreakError:
                continue  # degenerate draw; the full segment still competes
            if res.reject[alpha] and res.t_n > best[0]:
                best = (res.t_n, a, b)
        _, a, b = best
        window = TimeSeriesPanel(panel.values[a:b])
        fit = locate_change_point(window, FractionGrid(eta1, eta2, b - a), h0)
        split = a + fit.r_hat
        if split <= lo or split >= hi:
            return
        found.append(split)
        visit(lo, split)
        visit(split, hi)

    visit(0, n)
    return sorted(s / n for s in found)
