"""Scalar special functions: log-gamma, regularized incomplete gamma/beta,
and the safeguarded quantile solvers built on them.

Everything is plain-float so the sequential kernel can call it without array
overhead; `log_gamma_array` is the vectorized variant used to precompute
per-day scoring constants.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NumericalError

# Lanczos approximation, g = 7, nine-term double-precision coefficient set.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)

_EPS = 2.220446049250313e-16
_TINY = 1e-300


def log_gamma(x: float) -> float:
    """ln Gamma(x) for finite x > 0."""
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0.0:
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    if x < 0.5:
        # Reflection keeps the Lanczos argument in its accurate range.
        return _LOG_PI - math.log(math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def log_gamma_array(x: np.ndarray) -> np.ndarray:
    """Vectorized `log_gamma` for positive arrays."""
    x = np.asarray(x, dtype=float)
    if x.size and (not np.all(np.isfinite(x)) or np.any(x <= 0.0)):
        raise DomainError("log_gamma_array requires finite positive entries")
    small = x < 0.5
    xa = np.where(small, 1.0 - x, x)
    z = xa - 1.0
    acc = np.full_like(z, _LANCZOS[0])
    for i in range(1, 9):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)
    if np.any(small):
        xs = x[small]
        out[small] = _LOG_PI - np.log(np.sin(np.pi * xs)) - out[small]
    return out


def _gamma_series(a: float, x: float, itmax: int) -> float:
    # Series representation of P(a, x), reliable for x < a + 1.
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(itmax):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - log_gamma(a))
    raise NumericalError(f"incomplete gamma series failed to converge (a={a}, x={x})")


def _gamma_contfrac(a: float, x: float, itmax: int) -> float:
    # Lentz continued fraction for Q(a, x), reliable for x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, itmax + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - log_gamma(a)) * h
    raise NumericalError(f"incomplete gamma continued fraction failed (a={a}, x={x})")


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if not (a > 0.0 and math.isfinite(a)):
        raise DomainError(f"shape must be positive, got {a!r}")
    if not (x >= 0.0 and math.isfinite(x)):
        raise DomainError(f"argument must be finite and nonnegative, got {x!r}")
    if x == 0.0:
        return 0.0
    itmax = 1000 + int(4.0 * math.sqrt(a))
    if x < a + 1.0:
        return _gamma_series(a, x, itmax)
    return 1.0 - _gamma_contfrac(a, x, itmax)


def _log_gamma_pdf_unit(a: float, x: float) -> float:
    # log density of Gamma(a, rate=1)
    return (a - 1.0) * math.log(x) - x - log_gamma(a)


def normal_quantile(u: float) -> float:
    """Standard normal quantile (Acklam's rational approximation).

    About 1e-9 relative accuracy; used only to seed Newton solvers.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must be in (0, 1), got {u!r}")
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    plow, phigh = 0.02425, 1.0 - 0.02425
    if u < plow:
        q = math.sqrt(-2.0 * math.log(u))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if u > phigh:
        q = math.sqrt(-2.0 * math.log(1.0 - u))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = u - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def inv_reg_lower_gamma(a: float, u: float, tol: float = 1e-13) -> float:
    """Solve P(a, x) = u for x by bracketed Newton with bisection fallback."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must be in (0, 1), got {u!r}")
    if not (a > 0.0 and math.isfinite(a)):
        raise DomainError(f"shape must be positive, got {a!r}")
    # Wilson-Hilferty starting point.
    z = normal_quantile(u)
    g = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))
    x = a * g * g * g if g > 0.0 else a * math.exp((math.log(u) + log_gamma(a + 1.0)) / a)
    x = max(x, _TINY)

    lo, hi = 0.0, math.inf
    flo = -u
    for _ in range(200):
        f = reg_lower_gamma(a, x) - u
        if abs(f) <= tol:
            return x
        if f > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
            flo = f
        lpdf = _log_gamma_pdf_unit(a, x)
        step_ok = lpdf > -700.0
        if step_ok:
            xn = x - f * math.exp(-lpdf)
            step_ok = math.isfinite(xn) and lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(x, 1.0)
        if xn == x:
            return x
        x = xn
    raise NumericalError(f"gamma quantile solver failed (a={a}, u={u}, resid={flo})")


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz continued fraction for the incomplete beta.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericalError(f"incomplete beta continued fraction failed (a={a}, b={b}, x={x})")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"beta shapes must be positive, got ({a!r}, {b!r})")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (log_gamma(a + b) - log_gamma(a) - log_gamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(ln_front) * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, dof: float) -> float:
    """CDF of the standard Student-t with `dof` degrees of freedom."""
    if not (dof > 0.0 and math.isfinite(dof)):
        raise DomainError(f"degrees of freedom must be positive, got {dof!r}")
    if t == 0.0:
        return 0.5
    tail = 0.5 * reg_inc_beta(0.5 * dof, 0.5, dof / (dof + t * t))
    return tail if t < 0.0 else 1.0 - tail


def _log_t_pdf(t: float, dof: float) -> float:
    return (log_gamma(0.5 * (dof + 1.0)) - log_gamma(0.5 * dof)
            - 0.5 * math.log(dof * math.pi)
            - 0.5 * (dof + 1.0) * math.log1p(t * t / dof))


def student_t_quantile(u: float, dof: float, tol: float = 1e-12) -> float:
    """Standard-t quantile by bracketed Newton on the CDF."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must be in (0, 1), got {u!r}")
    if u == 0.5:
        return 0.0
    if u < 0.5:
        return -student_t_quantile(1.0 - u, dof, tol)
    z = normal_quantile(u)
    x = z + (z ** 3 + z) / (4.0 * dof)  # first-order tail correction
    lo, hi = 0.0, math.inf
    for _ in range(200):
        f = student_t_cdf(x, dof) - u
        if abs(f) <= tol:
            return x
        if f > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        xn = x - f * math.exp(-_log_t_pdf(x, dof))
        if not (math.isfinite(xn) and lo < xn < hi):
            xn = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(x, 1.0)
        if xn == x:
            return x
        x = xn
    raise NumericalError(f"t quantile solver failed (dof={dof}, u={u})")
