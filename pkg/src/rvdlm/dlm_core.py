"""Conjugate state/volatility recursions shared by the three model classes.

One filtering day decomposes into three pure stages:

  evolve            discount the state scale (R = C/delta) and the volatility
                    degrees of freedom (n* = beta n)
  rv_update         condition the precision gamma on the day's realized
                    variance (skipped by the SV variant)
  price_update      condition state and precision on the day's price

Scale bookkeeping: C and R are carried in variance units relative to the
*current* volatility scale estimate, so the one-step predictive scale is
q = s + F'RF and the carried posterior means `theta | phi ~ N(m, C/(s phi))`
with `phi ~ G(n/2, n s/2)`. Whenever new information moves the volatility
scale (the realized-variance update, the price update), the state scale
matrix is re-expressed against the new anchor rather than multiplied by the
scale ratio; R therefore passes through `rv_update` unchanged. Filtered
summaries under this convention: E[theta] = m, V[theta] = C n/(n-2),
E[phi] = 1/s, and each coefficient margin is t_n(m_i, C_ii).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .distributions import StudentTParams, student_t_logpdf
from .errors import DomainError, NumericalError


class ModelClass(enum.Enum):
    """Regressor layout selector.

    SVDLM and RVDLM share F = (1, y_prev, x_prev); RVLDLM adds the
    contemporaneous realized SD: F = (1, y_prev, x_now, x_prev). SVDLM ignores
    the realized variance in volatility learning.
    """

    SVDLM = "svdlm"
    RVDLM = "rvdlm"
    RVLDLM = "rvldlm"

    @property
    def dim(self) -> int:
        return 4 if self is ModelClass.RVLDLM else 3

    @property
    def uses_rv(self) -> bool:
        return self is not ModelClass.SVDLM

    @property
    def uses_contemporaneous_rv(self) -> bool:
        return self is ModelClass.RVLDLM

    @property
    def coefficient_names(self) -> tuple[str, ...]:
        if self is ModelClass.RVLDLM:
            return ("intercept", "ar1", "rv_now", "rv_lag")
        return ("intercept", "ar1", "rv_lag")


@dataclass(frozen=True)
class HyperParams:
    """Discount factors and the realized-variance shape index.

    delta discounts the state scale, beta the volatility degrees of freedom;
    alpha weights one realized-variance observation against one price
    observation in volatility learning (alpha = 0 for the SV variant).
    """

    delta: float
    beta: float
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must be in (0, 1], got {self.delta!r}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must be in (0, 1], got {self.beta!r}")
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be finite and nonnegative, got {self.alpha!r}")


def _as_state_matrix(M, dim: int, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (dim, dim):
        raise DomainError(f"{name} must be {dim}x{dim}, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} must be finite")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-8 * max(1.0, float(np.abs(M).max()))):
        raise DomainError(f"{name} must be symmetric")
    return M


def _as_state_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be a finite 1-d vector")
    return v


@dataclass(frozen=True)
class NormalGammaPosterior:
    """Carried filter state: state moments (m, C) plus gamma volatility
    parameters (n, s) with E[phi | data] = 1/s."""

    m: np.ndarray
    C: np.ndarray
    n: float
    s: float

    def __post_init__(self):
        m = _as_state_vector(self.m, "m")
        C = _as_state_matrix(self.C, m.size, "C")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "C", C)
        if not self.n > 0.0:
            raise DomainError(f"n must be positive, got {self.n!r}")
        if not self.s > 0.0:
            raise DomainError(f"s must be positive, got {self.s!r}")

    @property
    def dim(self) -> int:
        return self.m.size


@dataclass(frozen=True)
class PriorMoments:
    """One-step-evolved prior: (a, R) state moments, discounted degrees of
    freedom n_star, and the volatility scale s_prev carried into the day."""

    a: np.ndarray
    R: np.ndarray
    n_star: float
    s_prev: float

    def __post_init__(self):
        a = _as_state_vector(self.a, "a")
        R = _as_state_matrix(self.R, a.size, "R")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "R", R)
        if not self.n_star > 0.0:
            raise DomainError(f"n_star must be positive, got {self.n_star!r}")
        if not self.s_prev > 0.0:
            raise DomainError(f"s_prev must be positive, got {self.s_prev!r}")

    @property
    def dim(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class RvUpdatedPrior:
    """Prior after conditioning the precision on the day's realized variance."""

    a: np.ndarray
    R: np.ndarray
    n_tilde: float
    s_tilde: float

    @property
    def dim(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class OneStepStats:
    """One-step forecast quantities kept for scoring: location, squared
    scale, error, degrees of freedom, and the predictive log density of y."""

    forecast: float
    scale: float
    error: float
    dof: float
    log_density: float


def evolve(post: NormalGammaPosterior, hp: HyperParams) -> PriorMoments:
    """Discount evolution: a = m, R = C/delta, n* = beta n, s carried."""
    R = post.C / hp.delta
    R = 0.5 * (R + R.T)
    return PriorMoments(post.m.copy(), R, hp.beta * post.n, post.s)


def rv_update(prior: PriorMoments, z: float, alpha: float) -> RvUpdatedPrior:
    """Condition the precision gamma on realized variance z > 0.

    n~ = n* + alpha and s~ = r~ s_prev with
    r~ = (n* + alpha z / s_prev) / n~. State moments pass through unchanged.
    """
    if not (isinstance(z, (int, float)) and math.isfinite(z) and z > 0.0):
        raise DomainError(f"realized variance must be positive (floor it upstream), got {z!r}")
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive for an RV update, got {alpha!r}")
    n_tilde = prior.n_star + alpha
    r_tilde = (prior.n_star + alpha * z / prior.s_prev) / n_tilde
    return RvUpdatedPrior(prior.a, prior.R, n_tilde, r_tilde * prior.s_prev)


def build_regressor(mc: ModelClass, y_prev: float, x_now: float, x_prev: float) -> np.ndarray:
    """Regression vector in the fixed ordering (1, y_prev[, x_now], x_prev)."""
    for name, v in (("y_prev", y_prev), ("x_now", x_now), ("x_prev", x_prev)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    if mc is ModelClass.RVLDLM:
        return np.array([1.0, y_prev, x_now, x_prev])
    return np.array([1.0, y_prev, x_prev])


def _observe_price(a: np.ndarray, R: np.ndarray, dof: float, vol_scale: float,
                   y: float, F: np.ndarray) -> tuple[NormalGammaPosterior, OneStepStats]:
    if F.shape != a.shape:
        raise DomainError(f"regressor dimension {F.shape} does not match state {a.shape}")
    if not math.isfinite(y):
        raise DomainError(f"price observation must be finite, got {y!r}")
    Rf = R @ F
    f = float(F @ a)
    q = vol_scale + float(F @ Rf)
    if not (math.isfinite(q) and q > 0.0):
        raise NumericalError(
            f"nonpositive one-step scale q={q!r} (vol_scale={vol_scale!r}, "
            f"F'RF={float(F @ Rf)!r}); R is not a valid prior scale")
    e = y - f
    A = Rf / q
    C = R - q * np.outer(A, A)
    C = 0.5 * (C + C.T)
    dmin = float(np.diag(C).min())
    if dmin < -1e-10 * max(1.0, float(np.diag(R).max())):
        raise NumericalError(f"posterior scale lost positive semidefiniteness (min diag {dmin})")
    m = a + A * e
    n = dof + 1.0
    r = (dof + e * e / q) / n
    s = r * vol_scale
    logpdf = student_t_logpdf(y, StudentTParams(dof, f, q))
    return (NormalGammaPosterior(m, C, n, s),
            OneStepStats(f, q, e, dof, logpdf))


def price_update(prior_rv: RvUpdatedPrior, y: float, F: np.ndarray):
    """Condition on the day's price after the realized-variance update.

    One-step predictive is t with dof n~, location f = F'a and squared scale
    q~ = s~ + F'RF; the posterior follows the conjugate formulas with
    n = n~ + 1 and s = r s~, r = (n~ + e^2/q~)/n.
    """
    return _observe_price(prior_rv.a, prior_rv.R, prior_rv.n_tilde, prior_rv.s_tilde, y, F)


def sv_volatility_update_path(prior: PriorMoments, y: float, F: np.ndarray):
    """Price update without realized-variance conditioning (the SV path):
    identical algebra against (n*, s_prev) instead of (n~, s~)."""
    return _observe_price(prior.a, prior.R, prior.n_star, prior.s_prev, y, F)


def limiting_dof(hp: HyperParams, uses_rv: bool = True) -> float:
    """Fixed point of n -> beta n + alpha + 1 (alpha = 0 on the SV path)."""
    alpha = hp.alpha if uses_rv else 0.0
    if hp.beta == 1.0:
        return math.inf
    return (1.0 + alpha) / (1.0 - hp.beta)
