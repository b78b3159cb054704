"""Command-line pipeline runner.

Subcommands:
  filter  run the configured filters and emit trajectories/scores
  synth   generate a synthetic OHLC file from the bivariate model
  score   recompute log-Bayes-factor trajectories from emitted increments

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .dlm_core import ModelClass
from .errors import ConfigError, RvdlmError
from .ingestion import write_csv
from .pipeline import load_config, recompute_bayes_factors, run_filter_pipeline
from .synthetic import SyntheticParams, generate_synthetic, slowly_varying_theta

_FMT = "%.17g"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvdlm",
        description="Sequential price/realized-volatility filtering, forecasting and scoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_filter = sub.add_parser("filter", help="run the filter pipeline from a config file")
    p_filter.add_argument("--config", required=True, help="JSON config path")
    p_filter.add_argument("--out", default=None, help="output directory (overrides config)")
    p_filter.add_argument("--seed", type=int, default=None, help="seed echoed in the summary")

    p_synth = sub.add_parser("synth", help="generate synthetic OHLC data")
    p_synth.add_argument("--model", required=True,
                         choices=[m.value for m in ModelClass])
    p_synth.add_argument("--days", type=int, required=True, help="modeled days T")
    p_synth.add_argument("--params", default=None,
                         help="JSON file with generator settings (see README)")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--truth-out", default=None,
                         help="optional CSV path for the latent truth")
    p_synth.add_argument("--seed", type=int, default=0)

    p_score = sub.add_parser("score", help="recompute BF trajectories from a finished run")
    p_score.add_argument("--run-dir", required=True, help="directory with pipeline outputs")
    return parser


def _cmd_filter(args) -> int:
    config = load_config(args.config, out_dir_override=args.out, seed_override=args.seed)
    summary = run_filter_pipeline(config)
    for ticker, entry in summary["series"].items():
        scores = ", ".join(f"{m}={v['cumulative_log_score']:.3f}"
                           for m, v in entry["models"].items())
        print(f"{ticker}: {entry['days_modeled']} days "
              f"({entry['days_train']} train / {entry['days_eval']} eval); {scores}")
    print(f"outputs written to {config.out_dir}")
    return 0


def _synth_params(args) -> SyntheticParams:
    model = ModelClass(args.model)
    raw = {}
    if args.params:
        try:
            with open(args.params, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read generator params {args.params}: {exc}") from exc
    if "theta_path" in raw:
        theta = np.asarray(raw["theta_path"], dtype=float)
    else:
        if model is ModelClass.RVLDLM:
            base = raw.get("theta_base", [0.0046, 0.999, -0.5, 0.4])
        else:
            base = raw.get("theta_base", [0.0046, 0.999, 0.1])
        theta = slowly_varying_theta(
            model, args.days, base,
            raw.get("theta_amplitude"), raw.get("theta_period"))
    if theta.shape[0] != args.days:
        raise ConfigError(f"theta path has {theta.shape[0]} rows, --days is {args.days}")
    kwargs = {k: raw[k] for k in ("v0", "beta", "alpha", "vol_info", "y0", "floor_eps")
              if k in raw}
    return SyntheticParams(model=model, theta=theta, **kwargs)


def _cmd_synth(args) -> int:
    params = _synth_params(args)
    rng = np.random.default_rng(args.seed)
    bars, truth = generate_synthetic(params, rng)
    write_csv(args.out, bars)
    if args.truth_out:
        d = params.model.dim
        header = ["date_iso"] + [f"theta_{i}" for i in range(d)] + \
                 ["obs_variance_v", "y_log_price", "z_realized_var"]
        with open(args.truth_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for t, date in enumerate(truth.dates):
                row = [date.isoformat()]
                row += [_FMT % truth.theta[t, i] for i in range(d)]
                row += [_FMT % truth.v[t], _FMT % truth.y[t], _FMT % truth.z[t]]
                fh.write(",".join(row) + "\n")
    print(f"wrote {len(bars)} bars to {args.out} (seed={args.seed})")
    return 0


def _cmd_score(args) -> int:
    written = recompute_bayes_factors(args.run_dir)
    for path in written:
        print(f"rewrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "filter":
            return _cmd_filter(args)
        if args.command == "synth":
            return _cmd_synth(args)
        return _cmd_score(args)
    except RvdlmError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
