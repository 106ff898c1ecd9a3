"""Monte Carlo harness: power curves, paired comparisons, null diagnostics,
separation-rate sweeps and adaptive-test runs."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy
from scipy import stats as sps

from . import __version__
from .errors import DomainError, NotPositiveDefinite
from .models import (
    ExtremalPrior,
    PowerDecay,
    Tridiagonal,
    build,
    cholesky,
    power_decay_energy_unit,
    psi_tridiagonal,
)
from .params import adaptive_grid, adaptive_psi, profile, separation_rate
from .procedures import calibration_from_stats, simulate
from .sampler import SeedSpec, sample_gaussian
from .statistic import cross_products, dstat_from_products, unweighted_profile

POWER_COLUMNS = ["scenario", "n", "p", "param", "psi", "power", "half_width", "B", "seed", "threshold"]

FIG1_PSI_RANGE = (0.05, 0.6)
FIG1_POINTS = 12
FIG2_RHOS = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35)


@dataclass
class ExperimentConfig:
    scenario: str = "fig1"
    n: int = 20
    p: tuple = (20, 80, 120)
    alpha: float = 1.0
    ell: float = 1.0
    phi: Optional[float] = None  # None: weights built at phi = psi of each alternative
    M: Optional[tuple] = None
    rho: Optional[tuple] = None
    B_calibration: int = 1000
    B_power: int = 1000
    level: float = 0.05
    seed: int = 0
    out: Optional[str] = None
    renormalize: bool = True
    alpha_lo: float = 1.25
    alpha_hi: float = 3.0
    c_star: Optional[float] = None
    radius_mult: float = 4.0
    c_list: tuple = (1.0, 2.0, 4.0, 8.0)
    w_n: int = 10
    w_reps: int = 100_000

    def validate(self):
        if self.scenario not in ("fig1", "fig2", "null-moments", "normality", "custom"):
            raise DomainError(f"unknown scenario {self.scenario!r}")
        if not self.p:
            raise DomainError("p list is empty")
        if not 0 < self.level < 0.5:
            raise DomainError(f"level must lie in (0, 1/2), got {self.level}")
        if self.n < 2:
            raise DomainError("n must be >= 2")
        for name in ("M", "rho"):
            v = getattr(self, name)
            if v is not None and len(v) == 0:
                raise DomainError(f"{name} list is empty")
        return self

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "ExperimentConfig":
        base = {
            "fig1": dict(n=20, p=(20, 80, 120)),
            "fig2": dict(n=20, p=(120,)),
            "null-moments": dict(n=20, p=(100,), phi=0.1, B_power=10_000),
            "normality": dict(n=50, p=(200,), phi=0.1, B_power=2000),
            "custom": dict(),
        }[scenario]
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(scenario=scenario, **base).validate()

    def family(self) -> str:
        if self.M is not None:
            return "power_decay"
        if self.rho is not None or self.scenario == "fig2":
            return "tridiagonal"
        return "power_decay"


@dataclass
class ExperimentReport:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def column(self, name, **where):
        return [r[name] for r in self.rows if all(r[k] == v for k, v in where.items())]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def half_width(power: float, B: int) -> float:
    return 1.96 * math.sqrt(power * (1 - power) / B)


def versions() -> dict:
    return {"covtest": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def sidecar(config: ExperimentConfig, report: ExperimentReport) -> str:
    doc = {"config": asdict(config), "versions": versions(), "seed": config.seed, "meta": report.meta}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _alternatives(config: ExperimentConfig, p: int):
    """(param, psi, model) triples for one dimension."""
    if config.family() == "tridiagonal":
        rhos = config.rho if config.rho is not None else FIG2_RHOS
        return [(float(r), psi_tridiagonal(r, p), Tridiagonal(float(r))) for r in rhos]
    unit = math.sqrt(power_decay_energy_unit(p))
    if config.M is not None:
        Ms = [float(m) for m in config.M]
    else:
        psis = np.geomspace(*FIG1_PSI_RANGE, FIG1_POINTS)
        Ms = [unit / float(s) for s in psis]
    return [(M, unit / M, PowerDecay(M)) for M in Ms]


def _factor(model, p):
    try:
        return cholesky(build(model, p))
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(exc.pivot, f"{model!r} is not positive definite at p={p} (pivot {exc.pivot})") from None


def _sort(rows):
    return sorted(rows, key=lambda r: (r["p"], r["param"], r["scenario"]))


def run_power_curve(config: ExperimentConfig, with_baseline: bool = False) -> ExperimentReport:
    """Calibrated power of the weighted test along a family of alternatives.

    For each dimension the null draws are shared by all grid points, and the
    alternative draws reuse the same normal variates for every parameter
    value. With ``with_baseline`` the unweighted statistic is evaluated on
    exactly the same replicates.
    """
    config.validate()
    root = SeedSpec(config.seed, (config.scenario,))
    rows = []
    grids = {}
    for p in config.p:
        alts = _alternatives(config, p)
        factors = [_factor(model, p) for _, _, model in alts]
        profs = [profile(config.alpha, config.ell, config.phi or psi, p, config.renormalize) for _, psi, _ in alts]
        base = unweighted_profile(p)
        null_profiles = profs + ([base] if with_baseline else [])
        null = simulate(null_profiles, config.n, config.B_calibration, root.child("null", p))
        grids[str(p)] = [a[0] for a in alts]
        for k, ((param, psi, _), L, prof) in enumerate(zip(alts, factors, profs)):
            cal = calibration_from_stats(null[:, k], config.level, root.child("null", p))
            pr = [prof] + ([base] if with_baseline else [])
            alt = simulate(pr, config.n, config.B_power, root.child("alt", p), chol=L)
            tests = [("delta", cal.threshold, alt[:, 0])]
            if with_baseline:
                cal_b = calibration_from_stats(null[:, -1], config.level, root.child("null", p))
                tests.append(("unweighted", cal_b.threshold, alt[:, 1]))
            for name, thr, vals in tests:
                power = float(np.mean(vals > thr))
                label = config.scenario if not with_baseline else f"{config.scenario}/{name}"
                rows.append({
                    "scenario": label, "n": config.n, "p": p, "param": param, "psi": psi,
                    "power": power, "half_width": half_width(power, config.B_power),
                    "B": config.B_power, "seed": config.seed, "threshold": thr,
                })
    param_name = "rho" if config.family() == "tridiagonal" else "M"
    meta = {"param": param_name, "grid": grids, "phi_mode": "oracle" if config.phi is None else "fixed"}
    return ExperimentReport(list(POWER_COLUMNS), _sort(rows), meta)


def run_comparison(config: ExperimentConfig) -> ExperimentReport:
    """Weighted vs unweighted test on common replicates (tridiagonal alternatives)."""
    if config.family() != "tridiagonal":
        raise DomainError("comparison runs on the tridiagonal family")
    return run_power_curve(config, with_baseline=True)


def w_moments(n: int, reps: int, seed: SeedSpec) -> dict:
    """Monte Carlo moments of ``W_ij = sum_k X_ki X_kj`` under the null.

    Returns a mapping name -> (estimate, standard error, target).
    """
    x = seed.generator().standard_normal((reps, n, 3))
    w12 = np.einsum("rk,rk->r", x[:, :, 0], x[:, :, 1])
    w13 = np.einsum("rk,rk->r", x[:, :, 0], x[:, :, 2])
    w11 = np.einsum("rk,rk->r", x[:, :, 0], x[:, :, 0])
    out = {}
    for name, vals, target in [
        ("E[W_ij]", w12, 0.0),
        ("E[W_ij^2]", w12**2, float(n)),
        ("E[W_ij^4]", w12**4, 3.0 * n**2 + 6.0 * n),
        ("E[W_ij^2 W_ij'^2]", w12**2 * w13**2, float(n**2 + 2 * n)),
        ("E[W_ii]", w11, float(n)),
        ("E[W_ii^2]", w11**2, float(n**2 + 2 * n)),
    ]:
        out[name] = (float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)), target)
    return out


DIAG_COLUMNS = ["quantity", "n", "p", "estimate", "target", "se", "B"]


def run_null_diagnostics(config: ExperimentConfig) -> ExperimentReport:
    """Null mean/variance of the statistic, KS distance of its standardized law
    to N(0, 1), and W moments."""
    config.validate()
    root = SeedSpec(config.seed, ("diagnose",))
    rows = []
    phi = config.phi if config.phi is not None else 0.1
    for p in config.p:
        prof = profile(config.alpha, config.ell, phi, p, config.renormalize)
        B = config.B_power
        vals = simulate([prof], config.n, B, root.child("null", p))[:, 0]
        n = config.n
        target_var = 2 * prof.normalization() / (n * (n - 1) * p)
        z = n * math.sqrt(p) * vals
        ks = float(sps.kstest(z, "norm").statistic)
        mean, sd = float(vals.mean()), float(vals.std(ddof=1))
        var = sd**2
        kurt = float(sps.kurtosis(vals, fisher=False))
        var_se = var * math.sqrt((kurt - 1) / B)
        rows += [
            {"quantity": "mean", "n": n, "p": p, "estimate": mean, "target": 0.0, "se": sd / math.sqrt(B), "B": B},
            {"quantity": "variance", "n": n, "p": p, "estimate": var, "target": target_var, "se": var_se, "B": B},
            {"quantity": "ks_distance", "n": n, "p": p, "estimate": ks, "target": 0.0, "se": float("nan"), "B": B},
        ]
    for name, (est, se, target) in w_moments(config.w_n, config.w_reps, root.child("w")).items():
        rows.append({"quantity": name, "n": config.w_n, "p": 3, "estimate": est, "target": target, "se": se, "B": config.w_reps})
    return ExperimentReport(list(DIAG_COLUMNS), rows, {"phi": phi})


def run_rate_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Calibrated power against the all-plus extremal prior at radius ``c * phi~``."""
    config.validate()
    root = SeedSpec(config.seed, ("rate",))
    rows = []
    for p in config.p:
        phit = separation_rate(config.alpha, config.ell, config.n, p)
        for c in config.c_list:
            phi = c * phit
            prof = profile(config.alpha, config.ell, phi, p, config.renormalize)
            null = simulate([prof], config.n, config.B_calibration, root.child("null", p, float(c)))[:, 0]
            thr = calibration_from_stats(null, config.level, root).threshold
            L = _factor(ExtremalPrior(config.alpha, config.ell, phi), p)
            alt = simulate([prof], config.n, config.B_power, root.child("alt", p, float(c)), chol=L)[:, 0]
            power = float(np.mean(alt > thr))
            rows.append({
                "scenario": "rate", "n": config.n, "p": p, "param": float(c), "psi": phi,
                "power": power, "half_width": half_width(power, config.B_power),
                "B": config.B_power, "seed": config.seed, "threshold": thr,
            })
    return ExperimentReport(list(POWER_COLUMNS), _sort(rows), {"param": "c", "phi_tilde": {str(p): separation_rate(config.alpha, config.ell, config.n, p) for p in config.p}})


def _adaptive_rejections(grid, n, B, seed, chol=None, p=None):
    def one(b):
        x = sample_gaussian(chol, n, seed.child(b), p=p)
        cp = cross_products(x, grid.max_offsets + 1)
        vals = [dstat_from_products(cp, pt.profile) for pt in grid.points]
        return any(v > grid.c_star * pt.t for v, pt in zip(vals, grid.points))

    return np.array([one(b) for b in range(B)])


def run_adaptive(config: ExperimentConfig) -> ExperimentReport:
    """Type I error and power of the adaptive test.

    The alternative is the all-plus extremal prior of smoothness
    ``config.alpha`` at radius ``radius_mult * psi_alpha``.
    """
    config.validate()
    root = SeedSpec(config.seed, ("adaptive",))
    rows = []
    for p in config.p:
        grid = adaptive_grid(config.alpha_lo, config.alpha_hi, config.ell, config.n, p, config.c_star)
        null = _adaptive_rejections(grid, config.n, config.B_power, root.child("null", p), p=p)
        radius = config.radius_mult * adaptive_psi(config.alpha, config.n, p)
        L = _factor(ExtremalPrior(config.alpha, config.ell, radius), p)
        alt = _adaptive_rejections(grid, config.n, config.B_power, root.child("alt", p), chol=L)
        for label, rej, psi in (("adaptive/null", null, 0.0), ("adaptive/alt", alt, radius)):
            power = float(np.mean(rej))
            rows.append({
                "scenario": label, "n": config.n, "p": p, "param": config.alpha, "psi": psi,
                "power": power, "half_width": half_width(power, config.B_power),
                "B": config.B_power, "seed": config.seed, "threshold": grid.c_star,
            })
    meta = {"alpha_lo": config.alpha_lo, "alpha_hi": config.alpha_hi, "threshold_column": "c_star"}
    return ExperimentReport(list(POWER_COLUMNS), _sort(rows), meta)
