"""Covariance families, class-membership functionals, factorization and whitening."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import DomainError, NotCorrelation, NotPositiveDefinite
from .params import band_width, lambda_

DIAG_TOL = 1e-12


@dataclass(frozen=True)
class Identity:
    kind = "identity"


@dataclass(frozen=True)
class PowerDecay:
    """Off-diagonal entries ``|i-j|**(-3/2) * |i+j|**(1/100) / M`` (1-based i, j)."""

    M: float
    kind = "power_decay"


@dataclass(frozen=True)
class Tridiagonal:
    rho: float
    kind = "tridiagonal"


@dataclass(frozen=True)
class ExtremalPrior:
    """Least favourable matrix ``u_ij * sqrt(lam) * (1 - (|i-j|/T)**(2 alpha))_+**(1/2)``.

    ``signs`` is a symmetric p x p matrix of +-1 (see :func:`random_signs`);
    ``None`` means all signs positive.
    """

    alpha: float
    ell: float
    phi: float
    signs: Optional[np.ndarray] = None
    kind = "extremal_prior"


@dataclass(frozen=True)
class Explicit:
    matrix: np.ndarray
    kind = "explicit"


CovarianceModel = Union[Identity, PowerDecay, Tridiagonal, ExtremalPrior, Explicit]


def describe(model: CovarianceModel) -> dict:
    """JSON-ready description of a model."""
    out = {"kind": model.kind}
    if isinstance(model, Explicit):
        out["p"] = int(np.asarray(model.matrix).shape[0])
        return out
    for k, v in asdict(model).items():
        if k == "signs":
            out["signs"] = "all-plus" if v is None else "custom"
        else:
            out[k] = v
    return out


def random_signs(p: int, band: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric sign matrix, zero diagonal, +-1 for ``1 <= |i-j| <= band``."""
    u = rng.choice(np.array([-1, 1], dtype=np.int8), size=(p, p))
    u = np.triu(u, 1)
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])
    u = (u + u.T) * (dist <= band)
    return u.astype(np.int8)


def extremal_diagonals(alpha: float, ell: float, phi: float) -> np.ndarray:
    """Entries ``sigma*_d`` for offsets ``d = 1..T-1`` (zero from T on)."""
    T = band_width(alpha, ell, phi)
    lam = lambda_(alpha, ell, phi)
    d = np.arange(1, max(T, 1))
    return np.sqrt(lam * np.clip(1 - (d / T) ** (2 * alpha), 0.0, None))


def power_decay_energy_unit(p: int) -> float:
    """Energy functional of the power-decay family at ``M = 1``."""
    i = np.arange(1, p + 1)
    I, J = np.meshgrid(i, i, indexing="ij")
    mask = I < J
    vals = np.abs(I - J)[mask].astype(float) ** -3 * (I + J)[mask].astype(float) ** (2 / 100)
    return float(math.fsum(vals) / p)


def psi_power_decay(M: float, p: int) -> float:
    """``psi(M)``: square root of the energy of the power-decay matrix."""
    return math.sqrt(power_decay_energy_unit(p)) / M


def psi_tridiagonal(rho: float, p: int) -> float:
    return abs(rho) * math.sqrt((p - 1) / p)


def _toeplitz_from_diagonals(diags, p: int) -> np.ndarray:
    full = np.zeros(p)
    full[0] = 1.0
    k = min(len(diags), p - 1)
    full[1 : k + 1] = diags[:k]
    idx = np.arange(p)
    return full[np.abs(idx[:, None] - idx[None, :])]


def build(model: CovarianceModel, p: int) -> np.ndarray:
    """Dense p x p covariance matrix for ``model``."""
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    if isinstance(model, Identity):
        return np.eye(p)
    if isinstance(model, PowerDecay):
        if not (np.isfinite(model.M) and model.M > 0):
            raise DomainError(f"M must be > 0, got {model.M}")
        i = np.arange(1, p + 1, dtype=float)
        I, J = np.meshgrid(i, i, indexing="ij")
        with np.errstate(divide="ignore"):
            s = np.abs(I - J) ** -1.5 * (I + J) ** (1 / 100) / model.M
        np.fill_diagonal(s, 1.0)
        return s
    if isinstance(model, Tridiagonal):
        if not np.isfinite(model.rho):
            raise DomainError("rho must be finite")
        return _toeplitz_from_diagonals([model.rho], p)
    if isinstance(model, ExtremalPrior):
        s = _toeplitz_from_diagonals(extremal_diagonals(model.alpha, model.ell, model.phi), p)
        if model.signs is not None:
            u = np.asarray(model.signs)
            if u.shape != (p, p) or not np.array_equal(u, u.T):
                raise DomainError("signs must be a symmetric p x p matrix")
            off = ~np.eye(p, dtype=bool)
            s[off] = s[off] * u[off]
        return s
    if isinstance(model, Explicit):
        s = np.array(model.matrix, dtype=float)
        if s.shape != (p, p):
            raise DomainError(f"explicit matrix has shape {s.shape}, expected {(p, p)}")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12):
            raise DomainError("explicit matrix is not symmetric")
        return s
    raise DomainError(f"unknown model {model!r}")


@dataclass(frozen=True)
class ClassReport:
    energy: float
    sobolev: float
    in_F: bool
    in_Q: bool
    min_eig_lb: float


def class_report(sigma, alpha: float, ell: float, phi: float) -> ClassReport:
    """Energy ``(1/p) sum_{i<j} s_ij**2``, ellipsoid functional
    ``(1/p) sum_{i<j} s_ij**2 |i-j|**(2 alpha)`` and the Gershgorin bound
    ``1 - max_i sum_{j != i} |s_ij|`` on the smallest eigenvalue."""
    s = np.asarray(sigma, dtype=float)
    p = s.shape[0]
    if s.shape != (p, p):
        raise DomainError("sigma must be square")
    if np.max(np.abs(np.diag(s) - 1.0)) > DIAG_TOL:
        raise NotCorrelation("diagonal must be identically 1")
    iu = np.triu_indices(p, 1)
    sq = s[iu] ** 2
    dist = (iu[1] - iu[0]).astype(float)
    energy = math.fsum(sq) / p
    sobolev = math.fsum(sq * dist ** (2 * alpha)) / p
    off = np.abs(s - np.diag(np.diag(s)))
    lb = 1.0 - float(np.max(off.sum(axis=1)))
    in_F = sobolev <= ell
    return ClassReport(energy, sobolev, in_F, in_F and energy >= phi**2, lb)


def toeplitz_report(diags, p: int, alpha: float, ell: float, phi: float) -> ClassReport:
    """:func:`class_report` for a Toeplitz correlation matrix given by its
    off-diagonals, without forming the p x p matrix."""
    s = np.asarray(diags, dtype=float)[: p - 1]
    d = np.arange(1, s.size + 1, dtype=float)
    energy = math.fsum((p - d) * s**2) / p
    sobolev = math.fsum((p - d) * s**2 * d ** (2 * alpha)) / p
    # middle row sees every offset on both sides when p is large enough
    rows = np.zeros(p)
    a = np.abs(s)
    for k, v in enumerate(a, start=1):
        rows[k:] += v
        rows[:-k] += v
    lb = 1.0 - float(rows.max())
    in_F = sobolev <= ell
    return ClassReport(energy, sobolev, in_F, in_F and energy >= phi**2, lb)


def cholesky(sigma) -> np.ndarray:
    """Lower-triangular factor L with ``L @ L.T == sigma``.

    Raises
    ------
    NotPositiveDefinite
        With the 1-based pivot at which the factorization broke down.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DomainError("sigma must be square")
    if not np.allclose(s, s.T, rtol=0, atol=1e-12):
        raise DomainError("sigma must be symmetric")
    c, info = lapack.dpotrf(s, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(info)
    if info < 0:
        raise DomainError(f"dpotrf argument {-info} invalid")
    return c


def whiten(x, sigma0) -> np.ndarray:
    """Rows ``Z_k = L^{-1} X_k`` with ``L`` the Cholesky factor of ``sigma0``."""
    x = np.asarray(x, dtype=float)
    L = cholesky(sigma0)
    return solve_triangular(L, x.T, lower=True).T


def inverse_test_radius(psi: float, lambda_min: float) -> float:
    """Radius for the direct test when testing ``Sigma^{-1} = I`` at radius ``psi``
    over matrices with eigenvalues bounded below by ``lambda_min``."""
    if not psi > 0:
        raise DomainError("psi must be > 0")
    if not 0 < lambda_min <= 1:
        raise DomainError("lambda_min must lie in (0, 1]")
    return lambda_min * psi


def matrix_to_csv(sigma) -> str:
    s = np.asarray(sigma, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"p={s.shape[0]}"])
    for row in s:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    p = int(rows[0][0].split("=")[1])
    m = np.array([[float(v) for v in r] for r in rows[1:]])
    if m.shape != (p, p):
        raise DomainError(f"CSV body has shape {m.shape}, header says p={p}")
    return m


def model_to_json(model: CovarianceModel) -> str:
    return json.dumps(describe(model), sort_keys=True)
