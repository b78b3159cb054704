"""Realized-variance proxies computed from daily OHLC bars."""

from __future__ import annotations

import dataclasses
import datetime as dt
import math
from dataclasses import dataclass

from .errors import DataError, DomainError

#: Relative slack for vendor rounding: OHLC ordering violations below this are
#: clamped to validity, anything larger is a hard error.
OHLC_REL_TOL = 1e-9

#: Default floor applied to realized variance before it enters the gamma
#: update (the conditional-gamma likelihood degenerates at z = 0).
DEFAULT_RV_FLOOR = 1e-12


@dataclass(frozen=True)
class OhlcBar:
    """One trading day's open/high/low/close prices."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float


def validate_bar(bar: OhlcBar, rel_tol: float = OHLC_REL_TOL) -> OhlcBar:
    """Enforce L <= min(O, C) and max(O, C) <= H on positive prices.

    Violations within `rel_tol` (relative) are clamped; larger ones raise
    `DataError` carrying the bar's date.
    """
    o, h, l, c = bar.open, bar.high, bar.low, bar.close
    for name, p in (("open", o), ("high", h), ("low", l), ("close", c)):
        if not (isinstance(p, (int, float)) and math.isfinite(p) and p > 0.0):
            raise DataError(f"{name} price must be finite and positive, got {p!r}", bar.date)
    hi_floor = max(o, c)
    lo_cap = min(o, c)
    changed = False
    if h < hi_floor:
        if hi_floor - h <= rel_tol * hi_floor:
            h = hi_floor
            changed = True
        else:
            raise DataError(f"high {h} below max(open, close) {hi_floor}", bar.date)
    if l > lo_cap:
        if l - lo_cap <= rel_tol * lo_cap:
            l = lo_cap
            changed = True
        else:
            raise DataError(f"low {l} above min(open, close) {lo_cap}", bar.date)
    if changed:
        return dataclasses.replace(bar, high=h, low=l)
    return bar


def rogers_satchell(bar: OhlcBar) -> float:
    """Drift-robust realized variance
    z = log(H/C) log(H/O) + log(L/C) log(L/O), nonnegative on any valid bar.
    """
    bar = validate_bar(bar)
    h_c = math.log(bar.high / bar.close)
    h_o = math.log(bar.high / bar.open)
    l_c = math.log(bar.low / bar.close)
    l_o = math.log(bar.low / bar.open)
    z = h_c * h_o + l_c * l_o
    # each summand is a product of same-sign logs; clamp float residue
    return max(z, 0.0)


def realized_sd(z: float) -> float:
    """sqrt of a realized variance."""
    if not (isinstance(z, (int, float)) and math.isfinite(z)) or z < 0.0:
        raise DomainError(f"realized variance must be finite and nonnegative, got {z!r}")
    return math.sqrt(z)
