"""Configuration-driven pipeline: filter every (series, model) pair, emit
per-day trajectory CSVs, pairwise log-Bayes-factor trajectories, and a run
summary JSON.

Config is a JSON document; see README for the schema. Baked-in defaults
follow the standard specification: the SV variant uses (delta, beta) =
(0.999, 0.925), the RV variants (delta, beta, alpha) = (0.999, 0.875, 2.75),
initial state mean (0, 1, 0[, 0]) with prior scale diag(0.10, 0.01, 0.05
[, 0.05])/delta, and initial volatility degrees of freedom n* = beta. The
per-series initial volatility scale s1 has no universal default and must be
supplied.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dlm_core import HyperParams, ModelClass, PriorMoments
from .distributions import GammaParams, gamma_quantile
from .errors import ConfigError, DataError, NumericalError, RvdlmError
from .ingestion import CsvSchema, SeriesFrame, apply_split, build_series, parse_csv
from .kernel import FilterTrajectory, run_filter
from .rv_measures import DEFAULT_RV_FLOOR
from .scoring import ScoreLedger, log_bayes_factor_path, log_score_z_path
from .special import student_t_quantile

_FMT = "%.17g"

DEFAULT_HYPERPARAMS = {
    ModelClass.SVDLM: HyperParams(0.999, 0.925, 0.0),
    ModelClass.RVDLM: HyperParams(0.999, 0.875, 2.75),
    ModelClass.RVLDLM: HyperParams(0.999, 0.875, 2.75),
}
DEFAULT_A1 = {3: (0.0, 1.0, 0.0), 4: (0.0, 1.0, 0.0, 0.0)}
DEFAULT_R1_DIAG = {3: (0.10, 0.01, 0.05), 4: (0.10, 0.01, 0.05, 0.05)}


@dataclass(frozen=True)
class SeriesSpec:
    ticker: str
    path: str
    s1: float

    def __post_init__(self):
        if not self.s1 > 0.0:
            raise ConfigError(f"series {self.ticker!r}: s1 must be positive, got {self.s1!r}")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    variant: ModelClass
    hp: HyperParams
    a1: tuple = None
    r1_diag: tuple = None
    n_star_1: float = None

    def initial_prior(self, s1: float) -> PriorMoments:
        d = self.variant.dim
        a = np.array(self.a1 if self.a1 is not None else DEFAULT_A1[d], dtype=float)
        diag = np.array(self.r1_diag if self.r1_diag is not None else DEFAULT_R1_DIAG[d],
                        dtype=float)
        if a.size != d or diag.size != d:
            raise ConfigError(f"model {self.name!r}: prior vectors must have length {d}")
        n1 = self.n_star_1 if self.n_star_1 is not None else self.hp.beta
        return PriorMoments(a, np.diag(diag / self.hp.delta), n1, s1)


@dataclass(frozen=True)
class RunConfig:
    series: tuple[SeriesSpec, ...]
    models: tuple[ModelSpec, ...]
    train_end: dt.date
    eval_start: dt.date
    out_dir: str
    seed: int = 0
    floor_eps: float = DEFAULT_RV_FLOOR
    mc_samples: int = 100_000  # reserved for predictive-simulation tooling
    schema: CsvSchema = field(default_factory=CsvSchema)

    def __post_init__(self):
        if not self.series:
            raise ConfigError("config lists no series")
        if not self.models:
            raise ConfigError("config lists no models")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError(f"model names must be unique, got {names}")
        if not self.floor_eps > 0.0:
            raise ConfigError(f"floor_eps must be positive, got {self.floor_eps!r}")
        for s in self.series:
            if not os.path.exists(s.path):
                raise ConfigError(f"series {s.ticker!r}: file not found: {s.path}")


def _parse_date(text, what: str) -> dt.date:
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError as exc:
        raise ConfigError(f"{what}: invalid ISO date {text!r}") from exc


def _model_from_dict(entry: dict) -> ModelSpec:
    try:
        variant = ModelClass(str(entry["variant"]).lower())
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"model entry {entry!r}: unknown or missing variant "
                          f"(expected one of {[m.value for m in ModelClass]})") from exc
    base = DEFAULT_HYPERPARAMS[variant]
    hp = HyperParams(float(entry.get("delta", base.delta)),
                     float(entry.get("beta", base.beta)),
                     float(entry.get("alpha", base.alpha)))
    if variant.uses_rv and hp.alpha <= 0.0:
        raise ConfigError(f"model {entry.get('name', variant.value)!r}: "
                          f"{variant.value} requires alpha > 0")
    return ModelSpec(
        name=str(entry.get("name", variant.value)),
        variant=variant,
        hp=hp,
        a1=tuple(entry["a1"]) if "a1" in entry else None,
        r1_diag=tuple(entry["r1_diag"]) if "r1_diag" in entry else None,
        n_star_1=float(entry["n_star_1"]) if "n_star_1" in entry else None,
    )


def load_config(path_or_dict, out_dir_override=None, seed_override=None) -> RunConfig:
    """Build a validated RunConfig from a JSON file path or a dict."""
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        try:
            with open(path_or_dict, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path_or_dict}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path_or_dict} is not valid JSON: {exc}") from exc
    try:
        series = tuple(SeriesSpec(str(e["ticker"]), str(e["path"]), float(e["s1"]))
                       for e in raw["series"])
        models = tuple(_model_from_dict(e) for e in raw["models"])
        train_end = _parse_date(raw["train_end"], "train_end")
        eval_start = _parse_date(raw["eval_start"], "eval_start")
        out_dir = str(out_dir_override or raw.get("out_dir", "out"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RvdlmError):
            raise
        raise ConfigError(f"malformed config: {exc}") from exc
    schema = CsvSchema(**raw["schema"]) if "schema" in raw else CsvSchema()
    return RunConfig(
        series=series, models=models, train_end=train_end, eval_start=eval_start,
        out_dir=out_dir,
        seed=int(seed_override if seed_override is not None else raw.get("seed", 0)),
        floor_eps=float(raw.get("floor_eps", DEFAULT_RV_FLOOR)),
        mc_samples=int(raw.get("mc_samples", 100_000)),
        schema=schema,
    )


class _QuantileCache:
    """Gamma and t quantile multipliers keyed by degrees of freedom.

    The dof sequence converges geometrically, so a handful of solves serves
    thousands of days. Gamma quantiles of G(n/2, n s/2) factor as g(n)/s.
    """

    def __init__(self):
        self._gamma: dict[tuple[float, float], float] = {}
        self._t: dict[tuple[float, float], float] = {}

    def phi_quantile(self, u: float, n: float, s: float) -> float:
        key = (u, n)
        g = self._gamma.get(key)
        if g is None:
            g = gamma_quantile(u, GammaParams(0.5 * n, 0.5 * n))
            self._gamma[key] = g
        return g / s

    def t_mult(self, u: float, n: float) -> float:
        key = (u, n)
        t = self._t.get(key)
        if t is None:
            t = student_t_quantile(u, n)
            self._t[key] = t
        return t


def _trajectory_rows(frame: SeriesFrame, mspec: ModelSpec, traj: FilterTrajectory,
                     cache: _QuantileCache):
    names = mspec.variant.coefficient_names
    header = ["date_iso", "y_log_price", "z_realized_var", "x_realized_sd",
              "forecast_log_price", "forecast_scale_var", "forecast_error",
              "log_score_nats", "scored", "dof_n", "vol_scale_s_var",
              "sd_daily_med", "sd_daily_lo05", "sd_daily_hi95"]
    for c in names:
        header += [f"coef_{c}_med", f"coef_{c}_lo05", f"coef_{c}_hi95"]
    rvl = mspec.variant is ModelClass.RVLDLM
    if rvl:
        header += ["price_effect_med", "net_rv_med"]
    z_scores = None
    if mspec.variant.uses_rv:
        header.append("log_score_z_nats")
        z_scores = log_score_z_path(traj)
    ix_now = 2 if rvl else None
    ix_lag = 3 if rvl else 2
    rows = []
    for t in range(len(traj)):
        date = frame.dates[t]
        n, s = float(traj.n[t]), float(traj.s[t])
        scored = int(frame.eval_start is not None and date >= frame.eval_start)
        # sqrt(v) = 1/sqrt(phi): quantiles flip under the decreasing map
        phi_lo = cache.phi_quantile(0.05, n, s)
        phi_med = cache.phi_quantile(0.50, n, s)
        phi_hi = cache.phi_quantile(0.95, n, s)
        row = [date.isoformat(),
               _FMT % traj.y[t], _FMT % traj.z[t], _FMT % traj.x[t],
               _FMT % traj.forecast[t], _FMT % traj.scale[t], _FMT % traj.error[t],
               _FMT % traj.log_density[t], str(scored),
               _FMT % n, _FMT % s,
               _FMT % (1.0 / math.sqrt(phi_med)),
               _FMT % (1.0 / math.sqrt(phi_hi)),
               _FMT % (1.0 / math.sqrt(phi_lo))]
        tmult = cache.t_mult(0.95, n)
        for i in range(mspec.variant.dim):
            med = float(traj.m[t, i])
            half = tmult * math.sqrt(max(float(traj.C[t, i, i]), 0.0))
            row += [_FMT % med, _FMT % (med - half), _FMT % (med + half)]
        if rvl:
            row.append(_FMT % math.exp(float(traj.m[t, ix_now]) * float(traj.x[t])))
            row.append(_FMT % (float(traj.m[t, ix_now]) * float(traj.x[t])
                               + float(traj.m[t, ix_lag]) * float(traj.x_prev[t])))
        if z_scores is not None:
            row.append(_FMT % z_scores[t])
        rows.append(row)
    return header, rows


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def run_series_model(frame: SeriesFrame, mspec: ModelSpec, s1: float):
    """Filter one series under one model and build its score ledger."""
    init = mspec.initial_prior(s1)
    traj = run_filter(mspec.variant, mspec.hp, init,
                      frame.y, frame.z, frame.x, frame.y_prev, frame.x_prev,
                      dates=frame.dates)
    ledger = ScoreLedger(mspec.name, window_start=frame.eval_start)
    for t, date in enumerate(frame.dates):
        ledger.record(date, float(traj.log_density[t]))
    ledger.check_consistency()
    return traj, ledger


def run_filter_pipeline(config: RunConfig) -> dict:
    """Run every (series, model) pair and write all output files.

    Returns the summary dict (also written as summary.json). Deterministic:
    identical config and inputs yield byte-identical outputs.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    cache = _QuantileCache()
    summary = {
        "config": _echo_config(config),
        "seed": config.seed,
        "series": {},
    }
    for sspec in config.series:
        try:
            bars = parse_csv(sspec.path, config.schema)
            frame = build_series(bars, config.floor_eps, ticker=sspec.ticker)
            frame = apply_split(frame, config.train_end, config.eval_start)
        except RvdlmError as exc:
            raise type(exc)(f"series {sspec.ticker!r} [ingestion]: {exc}") from exc
        entry = {
            "days_modeled": len(frame),
            "days_train": frame.n_train,
            "days_eval": frame.n_eval,
            "first_date": frame.dates[0].isoformat(),
            "last_date": frame.dates[-1].isoformat(),
            "models": {},
            "log_bayes_factors": {},
        }
        ledgers = {}
        for mspec in config.models:
            try:
                traj, ledger = run_series_model(frame, mspec, sspec.s1)
            except RvdlmError as exc:
                raise type(exc)(
                    f"series {sspec.ticker!r} model {mspec.name!r} [filter]: {exc}") from exc
            ledgers[mspec.name] = ledger
            header, rows = _trajectory_rows(frame, mspec, traj, cache)
            _write_csv(os.path.join(config.out_dir, f"{sspec.ticker}__{mspec.name}.csv"),
                       header, rows)
            model_entry = {
                "cumulative_log_score": ledger.cumulative,
                "scored_days": len(ledger),
                "final_n": float(traj.n[-1]),
                "final_s": float(traj.s[-1]),
            }
            if mspec.variant.uses_rv:
                # diagnostic second tally on the realized-variance margin
                zs = log_score_z_path(traj)
                in_window = [t for t, d in enumerate(frame.dates)
                             if frame.eval_start is not None and d >= frame.eval_start]
                model_entry["cumulative_log_score_z"] = float(zs[in_window].sum()) \
                    if in_window else 0.0
            entry["models"][mspec.name] = model_entry
        for i in range(len(config.models)):
            for j in range(i + 1, len(config.models)):
                lo, hi = config.models[i].name, config.models[j].name
                path_rows = log_bayes_factor_path(ledgers[hi], ledgers[lo])
                name = f"{hi}_over_{lo}"
                _write_csv(
                    os.path.join(config.out_dir, f"{sspec.ticker}__BF__{name}.csv"),
                    ["date_iso", "cum_log_bf_nats"],
                    [[d.isoformat(), _FMT % v] for d, v in path_rows])
                entry["log_bayes_factors"][name] = (path_rows[-1][1] if path_rows else 0.0)
        summary["series"][sspec.ticker] = entry
    with open(os.path.join(config.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _echo_config(config: RunConfig) -> dict:
    return {
        "series": [{"ticker": s.ticker, "path": s.path, "s1": s.s1} for s in config.series],
        "models": [{
            "name": m.name, "variant": m.variant.value,
            "delta": m.hp.delta, "beta": m.hp.beta, "alpha": m.hp.alpha,
            "a1": list(m.a1) if m.a1 is not None else list(DEFAULT_A1[m.variant.dim]),
            "r1_diag": list(m.r1_diag) if m.r1_diag is not None
                       else list(DEFAULT_R1_DIAG[m.variant.dim]),
            "n_star_1": m.n_star_1 if m.n_star_1 is not None else m.hp.beta,
        } for m in config.models],
        "train_end": config.train_end.isoformat(),
        "eval_start": config.eval_start.isoformat(),
        "out_dir": config.out_dir,
        "floor_eps": config.floor_eps,
        "mc_samples": config.mc_samples,
    }


def recompute_bayes_factors(run_dir: str) -> list[str]:
    """Rebuild the pairwise log-BF trajectory files from the per-day score
    increments already emitted in `run_dir` (the `score` subcommand)."""
    from .ingestion import read_csv_rows

    summary_path = os.path.join(run_dir, "summary.json")
    try:
        with open(summary_path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {summary_path}: {exc}") from exc
    model_names = [m["name"] for m in summary["config"]["models"]]
    written = []
    for ticker in summary["series"]:
        per_model = {}
        for name in model_names:
            path = os.path.join(run_dir, f"{ticker}__{name}.csv")
            header, rows = read_csv_rows(path)
            idx = {h: k for k, h in enumerate(header)}
            for col in ("date_iso", "log_score_nats", "scored"):
                if col not in idx:
                    raise DataError(f"{path}: missing column {col!r}")
            per_model[name] = [(r[idx["date_iso"]], float(r[idx["log_score_nats"]]))
                               for r in rows if r[idx["scored"]] == "1"]
        for i in range(len(model_names)):
            for j in range(i + 1, len(model_names)):
                lo, hi = model_names[i], model_names[j]
                hi_rows, lo_rows = per_model[hi], per_model[lo]
                if [d for d, _ in hi_rows] != [d for d, _ in lo_rows]:
                    raise DataError(f"{ticker}: scored dates differ between "
                                    f"{hi!r} and {lo!r}")
                total = 0.0
                out_rows = []
                for (d, a), (_, b) in zip(hi_rows, lo_rows):
                    total += a - b
                    out_rows.append([d, _FMT % total])
                path = os.path.join(run_dir, f"{ticker}__BF__{hi}_over_{lo}.csv")
                _write_csv(path, ["date_iso", "cum_log_bf_nats"], out_rows)
                written.append(path)
    return written
