"""Command-line entry point: ``iltlab <command> --config run.yaml [overrides]``.

Exit codes: 0 success, 1 scientific failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, estimator, oracle
from .config import FIELD_TYPES, FIELDS, ConfigError, RunConfig, from_mapping, parse_config
from .fbm import EmbeddingError, TimeGrid, sample_pair, write_paths_csv
from .model import ParameterError, condition_report

COMMANDS = (
    "check-condition", "simulate", "estimate", "sweep-eps",
    "moments", "oracle", "verify-bounds", "tail-check",
)
SCALING_EPSILONS = [2.0**-j for j in range(3, 11)]


class ScientificFailure(RuntimeError):
    pass


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else repr(float(v)) if isinstance(v, float) else v for v in row])


def _envelope(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.as_dict(), "seed": cfg.seed}


def cmd_check_condition(cfg, out, workers):
    rep = condition_report(cfg.params().hurst, cfg.params().k)
    write_json(out / "condition.json", {**_envelope(cfg, "check-condition"), "condition": rep.as_dict()})
    return (
        f"exists={'true' if rep.exists else 'false'} value={rep.condition_value:.6g} "
        f"beta={rep.beta:.6g} kappa1={rep.kappa1:.6g} radial_exponent={rep.radial_exponent:.6g}"
    )


def cmd_simulate(cfg, out, workers):
    params = cfg.params()
    count = min(cfg.dump_replicates, params.N)
    pairs = []
    for r in range(count):
        a, b = sample_pair(params, r, cfg.sampler)
        pairs.append((r, a, b))
    write_paths_csv(out / "paths.csv", pairs)
    grid = TimeGrid(params.T, params.M)
    write_json(out / "simulate.json", {
        **_envelope(cfg, "simulate"),
        "replicates_written": count,
        "dt": grid.dt,
        "terminal_values": [[a.values[-1].tolist(), b.values[-1].tolist()] for _, a, b in pairs],
    })
    return f"wrote {count} path pairs (M={params.M}, d={params.d}) to {out / 'paths.csv'}"


def cmd_estimate(cfg, out, workers):
    params = cfg.params()
    values = estimator.replicate_values(params, [params.epsilon], cfg.sampler, workers)[:, 0]
    rec = estimator.summarize(params, values)
    write_csv(out / "replicates.csv", ["replicate", "value"], ((i, float(v)) for i, v in enumerate(values)))
    payload = {
        **_envelope(cfg, "estimate"),
        "mean": rec.mean, "variance": rec.variance, "std_error": rec.std_error,
        "std_error_usable": rec.std_error_usable, "replicates_used": rec.replicates_used,
        "condition": condition_report(params.hurst, params.k).as_dict(),
    }
    if params.k.is_single_even():
        res = oracle.first_moment_mollified(params.hurst, params.k, params.T, params.epsilon)
        payload["oracle_mean"] = oracle.moment_sign(params.k) * res.value
    write_json(out / "estimate.json", payload)
    return f"mean={rec.mean:.6g} std_error={rec.std_error:.3g} N={rec.replicates_used}"


def cmd_sweep_eps(cfg, out, workers):
    params = cfg.params()
    try:
        sweep = estimator.eps_cauchy_sweep(params, cfg.halvings, cfg.sampler, workers)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    rows = []
    for j, eps in enumerate(sweep.epsilons):
        gap = sweep.cauchy_gaps[j] if j < len(sweep.cauchy_gaps) else None
        gse = sweep.gap_std_errors[j] if j < len(sweep.gap_std_errors) else None
        rows.append((eps, sweep.means[j], sweep.std_errors[j], gap, gse))
    write_csv(out / "sweep.csv", ["epsilon", "mean", "std_error", "cauchy_gap", "gap_std_error"], rows)
    rep = condition_report(params.hurst, params.k)
    payload = {
        **_envelope(cfg, "sweep-eps"),
        "slope": sweep.slope,
        "difference_slope": sweep.difference_slope,
        "gap_decrease_z": sweep.gap_decrease_z(),
        "condition": rep.as_dict(),
    }
    if rep.condition_value > 1:
        payload["expected_slope"] = -oracle.blowup_rate(params.hurst, params.k)
    write_json(out / "sweep.json", payload)
    return f"slope={sweep.slope:.4f} gaps={','.join(f'{g:.3g}' for g in sweep.cauchy_gaps)}"


def cmd_moments(cfg, out, workers):
    params = cfg.params()
    try:
        orders = sorted(set(cfg.moment_orders))
        values = estimator.replicate_values(params, [params.epsilon], cfg.sampler, workers)[:, 0]
        moments = [estimator.moment_from_samples(values, n) for n in orders]
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(out / "moments.csv", ["order", "value", "std_error"], ((m.order, m.value, m.std_error) for m in moments))
    rep = condition_report(params.hurst, params.k)
    payload = {**_envelope(cfg, "moments"), "condition": rep.as_dict(),
               "moments": [{"order": m.order, "value": m.value, "std_error": m.std_error} for m in moments]}
    if len(moments) >= 3 and orders == list(range(orders[0], orders[-1] + 1)):
        payload["growth"] = estimator.moment_growth_fit(moments, rep.kappa1)
    write_json(out / "moments.json", payload)
    return " ".join(f"m{m.order}={m.value:.6g}" for m in moments)


def cmd_oracle(cfg, out, workers):
    params = cfg.params()
    hurst, k = params.hurst, params.k
    if not k.is_single_even():
        raise ConfigError(f"oracle needs k with at most one nonzero, even entry; got {list(k.k)}")
    rep = condition_report(hurst, k)
    at_eps = oracle.first_moment_mollified(hurst, k, params.T, params.epsilon)
    limit = oracle.first_moment_mollified(hurst, k, params.T, 0.0)
    payload = {
        **_envelope(cfg, "oracle"),
        "condition": rep.as_dict(),
        "c_kd": oracle.c_kd_constant(k),
        "sign": oracle.moment_sign(k),
        "mollified": at_eps.as_dict(),
        "limit": limit.as_dict(),
    }
    if not rep.exists and rep.condition_value > 1:
        values = [oracle.first_moment_mollified(hurst, k, params.T, e).value for e in SCALING_EPSILONS]
        payload["scaling"] = {
            "epsilons": SCALING_EPSILONS,
            "values": values,
            "blowup_rate": oracle.blowup_rate(hurst, k),
            "difference_slope": estimator.difference_slope(SCALING_EPSILONS, values),
            "log_slope": estimator.log_slope(SCALING_EPSILONS, values),
        }
    write_json(out / "oracle.json", payload)
    if cfg.require_convergence and not limit.converged:
        raise ScientificFailure("first moment diverges as epsilon -> 0 but convergence was required")
    if limit.converged:
        return f"limit={limit.value:.8g} mollified={at_eps.value:.8g}"
    return f"limit divergent:true mollified={at_eps.value:.8g}"


def cmd_verify_bounds(cfg, out, workers):
    if cfg.fuzz_max_n > bounds.FUZZ_MAX_N:
        raise ConfigError(f"fuzz_max_n must be <= {bounds.FUZZ_MAX_N}")
    cases = bounds.fuzz_campaign(cfg.seed, cfg.fuzz_cases, max(1, cfg.fuzz_max_n))
    bounds.write_fuzz_csv(out / "fuzz.csv", cases)
    summary = bounds.fuzz_summary(cases) if cases else {"cases": 0}
    g_eigs = {n: bounds.g_matrix_min_eig(n) for n in range(1, bounds.GRAM_MAX_N + 1)}
    summary["g_matrix_min_eig_min"] = min(g_eigs.values())
    summary["brownian"] = bounds.brownian_exactness(cfg.seed)
    write_json(out / "fuzz_summary.json", {**_envelope(cfg, "verify-bounds"), "summary": summary})
    violations = sum(summary.get(key, 0) for key in ("eig_interp_violations", "det_interp_violations", "pd_violations"))
    brown = summary["brownian"]
    if violations or summary["g_matrix_min_eig_min"] < 0.2 or brown["det_ratio_max_dev"] > 1e-10 or brown["lnd_ratio_max_shortfall"] > 1e-10:
        raise ScientificFailure(f"matrix inequality violations: {summary}")
    return f"cases={len(cases)} violations=0 lnd_ratio_min={summary.get('lnd_ratio_min', float('nan')):.4g}"


def cmd_tail_check(cfg, out, workers):
    params = cfg.params()
    if params.N < estimator.MIN_TAIL_SAMPLES:
        raise ConfigError(f"tail-check needs N >= {estimator.MIN_TAIL_SAMPLES}, got {params.N}")
    values = estimator.replicate_values(params, [params.epsilon], cfg.sampler, workers)[:, 0]
    fit = estimator.tail_exponent_fit(values, cfg.tail_method, cfg.tail_bootstrap, seed=cfg.seed)
    rep = condition_report(params.hurst, params.k)
    write_json(out / "tail.json", {
        **_envelope(cfg, "tail-check"),
        "b": fit.b, "ci": [fit.ci_low, fit.ci_high], "method": fit.method,
        "exceedances": fit.exceedances, "beta": rep.beta,
    })
    return f"b={fit.b:.4g} ci=[{fit.ci_low:.4g}, {fit.ci_high:.4g}] beta={rep.beta:.4g}"


HANDLERS = {
    "check-condition": cmd_check_condition,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "sweep-eps": cmd_sweep_eps,
    "moments": cmd_moments,
    "oracle": cmd_oracle,
    "verify-bounds": cmd_verify_bounds,
    "tail-check": cmd_tail_check,
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iltlab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="YAML run configuration")
    parser.add_argument("--out", type=Path, default=Path("iltlab_out"), help="output directory")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: $ILT_LAB_WORKERS or 1)")
    converters = {float: float, int: int, str: str, bool: _bool, list: _int_list}
    for name in FIELDS:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=f"set_{name}", type=converters[FIELD_TYPES[name]], default=None,
                            metavar=name.upper())
    return parser


def resolve_config(args) -> RunConfig:
    cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    overrides = {name: getattr(args, f"set_{name}") for name in FIELDS if getattr(args, f"set_{name}") is not None}
    if "d" in overrides and "k" not in overrides and len(cfg.k) != overrides["d"]:
        overrides["k"] = [0] * overrides["d"]
    return from_mapping(overrides, base=cfg) if overrides else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        workers = args.workers
        if workers is None:
            env = os.environ.get("ILT_LAB_WORKERS", "1")
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(f"ILT_LAB_WORKERS must be an integer, got {env!r}") from None
        if workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {workers}")
        args.out.mkdir(parents=True, exist_ok=True)
        summary = HANDLERS[args.command](cfg, args.out, workers)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScientificFailure as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except (oracle.OracleError, EmbeddingError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
