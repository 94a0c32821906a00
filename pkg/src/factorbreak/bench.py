"""Monte Carlo harness for size, power, location, and loading accuracy.

Cells follow the simulation design used throughout the package's numerical
validation: three AR(1) factors, equicorrelated noise at rho_e = 0.5, a
mid-sample break for the change settings, and factor strengths picked by a
two-letter code (S = strong, W = weak) for before/after the break.
Replications draw from independent named streams keyed by (seed, rep), so
reports are identical no matter how many workers run them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .dgp import DgpSpec, generate
from .errors import InvalidParamsError
from .loading import boundary_loadings
from .locate import locate_change_point
from .panel import FractionGrid
from .sntest import CriticalValueTable, get_critical_values, sn_statistic, choose_projection
from .subspace import SubspaceBasis, subspace_distance

SCHEMA_VERSION = 1
ALLOWED_ALPHAS = (0.10, 0.05, 0.01)
GAMMA0 = 0.5
K_FACTORS = 3
HIST_BIN_WIDTH = 0.01

SETTINGS: dict[str, tuple[float, float, bool]] = {
    "SS": (0.0, 0.0, True),
    "SW": (0.0, 0.25, True),
    "WS": (0.25, 0.0, True),
    "WW": (0.25, 0.25, True),
    "null-strong": (0.0, 0.0, False),
    "null-weak": (0.25, 0.25, False),
}


@dataclass(frozen=True)
class CellSpec:
    """One experiment cell: a sample geometry plus a factor-strength setting."""

    n: int
    p: int
    setting: str
    replications: int
    alphas: tuple[float, ...] = (0.05,)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.setting not in SETTINGS:
            raise InvalidParamsError(
                f"unknown setting {self.setting!r}; choose from {sorted(SETTINGS)}"
            )
        if self.replications < 1:
            raise InvalidParamsError("replications must be at least 1")
        for a in self.alphas:
            if not any(abs(a - allowed) < 1e-12 for allowed in ALLOWED_ALPHAS):
                raise InvalidParamsError(
                    f"alpha={a} not in the tabulated set {ALLOWED_ALPHAS}"
                )

    @property
    def deltas(self) -> tuple[float, float]:
        d1, d2, _ = SETTINGS[self.setting]
        return d1, d2

    @property
    def has_change(self) -> bool:
        return SETTINGS[self.setting][2]


@dataclass(frozen=True)
class ExperimentPlan:
    """A list of cells plus the shared pipeline parameters."""

    cells: tuple[CellSpec, ...]
    eta1: float = 0.1
    eta2: float = 0.9
    h0: int = 1

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentPlan":
        cells = tuple(
            CellSpec(
                n=int(c["n"]),
                p=int(c["p"]),
                setting=str(c["setting"]),
                replications=int(c["replications"]),
                alphas=tuple(float(a) for a in c.get("alphas", [0.05])),
                seed=int(c.get("seed", 0)),
            )
            for c in payload["cells"]
        )
        return cls(
            cells=cells,
            eta1=float(payload.get("eta1", 0.1)),
            eta2=float(payload.get("eta2", 0.9)),
            h0=int(payload.get("h0", 1)),
        )

    @classmethod
    def from_json(cls, path: str) -> "ExperimentPlan":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _spec_for(cell: CellSpec, rep: int) -> DgpSpec:
    d1, d2 = cell.deltas
    return DgpSpec(
        n=cell.n,
        p=cell.p,
        k1=K_FACTORS,
        k2=K_FACTORS,
        delta1=d1,
        delta2=d2,
        gamma0=GAMMA0 if cell.has_change else None,
        seed=(cell.seed, rep),
    )


def _size_rep(cell: CellSpec, rep: int, eta1: float, eta2: float, h0: int) -> float:
    panel, _ = generate(_spec_for(cell, rep))
    bnd = boundary_loadings(panel, eta1, eta2, h0, K_FACTORS, K_FACTORS)
    b, _ = choose_projection(panel, eta1, eta2, h0, boundary=bnd)
    t_n, _ = sn_statistic(panel.values @ b, eta1, eta2)
    return t_n


def _power_rep(
    cell: CellSpec,
    rep: int,
    eta1: float,
    eta2: float,
    h0: int,
    do_test: bool,
    do_locate: bool,
) -> tuple[float, float, float, float]:
    panel, truth = generate(_spec_for(cell, rep))
    bnd = boundary_loadings(panel, eta1, eta2, h0, K_FACTORS, K_FACTORS)
    t_n = math.nan
    if do_test:
        b, _ = choose_projection(panel, eta1, eta2, h0, boundary=bnd)
        t_n, _ = sn_statistic(panel.values @ b, eta1, eta2)
    gamma_hat = dist1 = dist2 = math.nan
    if do_locate:
        fit = locate_change_point(
            panel, FractionGrid(eta1, eta2, cell.n), h0, boundary=bnd
        )
        gamma_hat = fit.gamma_hat
        span1 = SubspaceBasis(np.linalg.qr(truth.a1)[0])
        span2 = SubspaceBasis(np.linalg.qr(truth.a2)[0])
        dist1 = subspace_distance(fit.loading1.q_hat, span1)
        dist2 = subspace_distance(fit.loading2.q_hat, span2)
    return t_n, gamma_hat, dist1, dist2


def _rate_se(rate: float, reps: int) -> float | None:
    if reps < 2:
        return None
    return math.sqrt(rate * (1.0 - rate) / reps)


def run_size_experiment(
    plan: ExperimentPlan,
    cv_table: CriticalValueTable | None = None,
    n_jobs: int = 1,
) -> dict:
    """Empirical rejection rates on no-change panels, one row per alpha."""
    if cv_table is None:
        cv_table = get_critical_values(plan.eta1, plan.eta2)
    rows = []
    for cell in plan.cells:
        if cell.has_change:
            raise InvalidParamsError(
                f"size experiment requires a null setting, got {cell.setting!r}"
            )
        stats = Parallel(n_jobs=n_jobs)(
            delayed(_size_rep)(cell, rep, plan.eta1, plan.eta2, plan.h0)
            for rep in range(cell.replications)
        )
        stats = np.asarray(stats)
        for a in cell.alphas:
            rate = float(np.mean(stats > cv_table.cv(a)))
            rows.append(
                {
                    "n": cell.n,
                    "p": cell.p,
                    "delta": cell.deltas[0],
                    "alpha": a,
                    "rejection_rate": rate,
                    "mc_se": _rate_se(rate, cell.replications),
                }
            )
    return {"schema_version": SCHEMA_VERSION, "kind": "size", "rows": rows}


def run_power_location_experiment(
    plan: ExperimentPlan,
    cv_table: CriticalValueTable | None = None,
    n_jobs: int = 1,
    do_test: bool = True,
    do_locate: bool = True,
) -> dict:
    """Rejection rates, location error, and loading-span distance per cell."""
    if do_test and cv_table is None:
        cv_table = get_critical_values(plan.eta1, plan.eta2)
    power_rows = []
    location_rows = []
    histogram_rows = []
    for cell in plan.cells:
        if not cell.has_change:
            raise InvalidParamsError(
                f"power experiment requires a change setting, got {cell.setting!r}"
            )
        results = Parallel(n_jobs=n_jobs)(
            delayed(_power_rep)(
                cell, rep, plan.eta1, plan.eta2, plan.h0, do_test, do_locate
            )
            for rep in range(cell.replications)
        )
        stats, gammas, d1s, d2s = (np.asarray(col) for col in zip(*results))
        d1, d2 = cell.deltas
        if do_test:
            for a in cell.alphas:
                rate = float(np.mean(stats > cv_table.cv(a)))
                power_rows.append(
                    {
                        "n": cell.n,
                        "p": cell.p,
                        "setting": cell.setting,
                        "delta1": d1,
                        "delta2": d2,
                        "alpha": a,
                        "rejection_rate": rate,
                        "mc_se": _rate_se(rate, cell.replications),
                    }
                )
        if do_locate:
            location_rows.append(
                {
                    "n": cell.n,
                    "p": cell.p,
                    "setting": cell.setting,
                    "mean_abs_gamma_err": float(np.mean(np.abs(gammas - GAMMA0))),
                    "mean_dist_regime1": float(np.mean(d1s)),
                    "mean_dist_regime2": float(np.mean(d2s)),
                    "over_count": int(np.sum(gammas > GAMMA0)),
                    "under_count": int(np.sum(gammas < GAMMA0)),
                    "replications": cell.replications,
                }
            )
            bins = np.floor(gammas / HIST_BIN_WIDTH + 1e-9).astype(int)
            for left, count in zip(*np.unique(bins, return_counts=True)):
                histogram_rows.append(
                    {
                        "n": cell.n,
                        "p": cell.p,
                        "setting": cell.setting,
                        "bin_left": round(left * HIST_BIN_WIDTH, 10),
                        "count": int(count),
                    }
                )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "power_location",
        "power_rows": power_rows,
        "location_rows": location_rows,
        "histogram_rows": histogram_rows,
    }


def write_rows_csv(rows: list[dict], path: str) -> None:
    if not rows:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_report_json(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
