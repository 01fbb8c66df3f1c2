"""Command-line batch runner.

Every output file embeds the resolved configuration and the library version;
feeding a file back through ``--config`` reproduces it byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from . import cumulants as cu
from . import rates, simulate, stein
from .covariance import FGN, CovarianceModel
from .cumulants import ChaosSumSpec
from .verify import run_verify

COMMANDS = ("cumulants", "simulate", "rates", "limits", "verify")

DEFAULTS = {
    "q": [2],
    "hurst": [0.5],
    "table": None,
    "n_grid": "2^6..2^10",
    "n_grid4": "2^6..2^12",
    "reps": simulate.DEFAULT_REPLICATES,
    "seed": None,
    "n_exact": cu.N_EXACT,
    "format": "csv",
    "workers": 1,
    "plot_data": False,
    "dump": False,
    "skip_inequalities": False,
}
RATES_DEFAULT_GRID = "2^6..2^13"

_DYADIC = re.compile(r"^\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*$")


class ConfigError(ValueError):
    pass


def parse_n_grid(spec) -> list[int]:
    """``"2^6..2^13"``, ``"64,128,256"``, ``"2^7"`` or a list of integers."""
    if isinstance(spec, (list, tuple)):
        vals = [int(v) for v in spec]
    else:
        text = str(spec)
        m = _DYADIC.match(text)
        if m:
            vals = rates.dyadic_grid(int(m.group(1)), int(m.group(2)))
        else:
            vals = []
            for part in text.split(","):
                part = part.strip()
                if part.startswith("2^"):
                    vals.append(2 ** int(part[2:]))
                elif part:
                    vals.append(int(part))
    if not vals:
        raise ConfigError(f"empty n grid {spec!r}")
    return vals


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaosrate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"chaosrate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config, or an output file of a previous run")
        p.add_argument("--out", help="output directory (default: current directory)")
        p.add_argument("--format", choices=("csv", "json"))
        if name == "verify":
            p.add_argument("--skip-inequalities", action="store_true", default=None)
            continue
        p.add_argument("--q", type=_int_list, help="Hermite orders, comma separated")
        p.add_argument("--hurst", type=_float_list, help="Hurst indices, comma separated")
        p.add_argument("--n-grid", dest="n_grid", help="path lengths: 2^6..2^13 or a list")
        if name in ("cumulants", "simulate", "limits"):
            p.add_argument("--table", help="two-column lag/value covariance table")
        if name in ("cumulants", "simulate"):
            p.add_argument("--n-exact", dest="n_exact", type=int)
        if name == "rates":
            p.add_argument("--n-grid4", dest="n_grid4", help="grid for the kappa4 bracket fits")
            p.add_argument("--plot-data", dest="plot_data", action="store_true", default=None)
        if name == "simulate":
            p.add_argument("--reps", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--workers", type=int)
            p.add_argument("--dump", action="store_true", default=None)
    return parser


def load_config_file(path) -> dict:
    """Config from a JSON file, or the config embedded in a previous output."""
    text = Path(path).read_text()
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    data = json.loads(text)
    if isinstance(data, dict) and "config" in data and "version" in data:
        return data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags (flags win)."""
    cfg = dict(DEFAULTS)
    if args.command == "rates":
        cfg["n_grid"] = RATES_DEFAULT_GRID
    if getattr(args, "config", None):
        loaded = load_config_file(args.config)
        unknown = set(loaded) - set(DEFAULTS) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if loaded.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {loaded['command']!r}, not {args.command!r}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    cmd = cfg["command"]
    if cmd == "verify":
        return
    for q in cfg["q"]:
        if not 2 <= int(q) <= 12:
            raise ConfigError(f"--q {q}: Hermite order must lie in [2, 12]")
    for h in cfg["hurst"]:
        if not 0.0 < float(h) < 1.0:
            raise ConfigError(f"--hurst {h}: must lie in (0, 1)")
    for n in parse_n_grid(cfg["n_grid"]):
        if not 1 <= n <= cu.MAX_N:
            raise ConfigError(f"--n-grid {n}: path length must lie in [1, {cu.MAX_N}]")
    if cmd == "simulate":
        if cfg["seed"] is None:
            raise ConfigError("simulate needs --seed (stochastic runs are always seeded)")
        if not 0 <= int(cfg["seed"]) < 2**64:
            raise ConfigError(f"--seed {cfg['seed']}: must lie in [0, 2^64)")
        if int(cfg["reps"]) < simulate.MIN_REPLICATES:
            raise ConfigError(f"--reps {cfg['reps']}: need at least {simulate.MIN_REPLICATES}")
        if min(parse_n_grid(cfg["n_grid"])) < 2:
            raise ConfigError("--n-grid: simulation needs n >= 2")
    if cmd == "rates" and cfg["table"]:
        raise ConfigError("rate tables are defined for fGN only")


def _models(cfg: dict) -> list[CovarianceModel]:
    models = [CovarianceModel.fgn(h) for h in cfg["hurst"]]
    if cfg.get("table"):
        models.append(CovarianceModel.load_table(cfg["table"]))
    return models


def _hurst(model: CovarianceModel) -> float:
    return model.hurst if model.kind == FGN else math.nan


# ---------------------------------------------------------------------------
# commands


CUMULANT_COLUMNS = cu.CumulantReport.CSV_COLUMNS + ("kappa4", "kappa4_method", "tv_bound", "model")


def cmd_cumulants(cfg: dict) -> tuple[list[dict], bool]:
    rows = []
    for q in cfg["q"]:
        for model in _models(cfg):
            for n in parse_n_grid(cfg["n_grid"]):
                rep = cu.cumulant_report(ChaosSumSpec(int(q), n, model), int(cfg["n_exact"]))
                row = dict(zip(cu.CumulantReport.CSV_COLUMNS, rep.csv_row()))
                row.update(kappa4=rep.kappa4.value, kappa4_method=rep.kappa4.method,
                           tv_bound=rep.tv_bound, model=model.label)
                rows.append(row)
    return rows, True


SIMULATE_COLUMNS = (
    "q", "H", "n", "model", "reps", "seed",
    "kappa3", "kappa3_hat", "kappa3_se", "kappa3_pass",
    "kappa4", "kappa4_hat", "kappa4_se", "kappa4_pass",
    "var_hat", "var_se", "var_pass", "abs_mean", "abs_mean_se",
    "g_lower", "g_se", "g_prediction", "g_pass",
    "h_lower", "h_se", "h_prediction", "h_pass",
)


def edgeworth_band(lower: simulate.McEstimate, prediction: float) -> bool:
    """Distance lower bound within 4 SE + 25% of the magnitude of the first-order prediction."""
    return lower.within(abs(prediction), 4.0, 0.25)


def cmd_simulate(cfg: dict, out_dir: Path | None = None) -> tuple[list[dict], bool]:
    g, h = stein.test_pair()
    seed, reps = int(cfg["seed"]), int(cfg["reps"])
    rows, ok = [], True
    for q in cfg["q"]:
        for model in _models(cfg):
            for n in parse_n_grid(cfg["n_grid"]):
                spec = ChaosSumSpec(int(q), n, model)
                plan = simulate.build_plan(model, n, seed)
                samples = simulate.sample_Fn(plan, spec, reps, seed, workers=cfg["workers"])
                if cfg["dump"] and out_dir is not None:
                    name = f"samples_q{q}_{model.kind}_{_hurst(model):g}_n{n}.f8"
                    simulate.write_samples(out_dir / name, samples, spec, seed)
                k3hat, k4hat = simulate.empirical_cumulants(samples, seed)
                var = simulate.empirical_variance(samples, seed)
                absm = simulate.empirical_abs_mean(samples, seed)
                k3 = cu.kappa3(spec)
                k4 = cu.kappa4(spec, int(cfg["n_exact"]))
                row = {"q": q, "H": _hurst(model), "n": n, "model": model.label,
                       "reps": reps, "seed": seed,
                       "kappa3": k3, "kappa3_hat": k3hat.estimate, "kappa3_se": k3hat.se,
                       "kappa3_pass": k3hat.within(k3),
                       "kappa4": k4.value, "kappa4_hat": k4hat.estimate, "kappa4_se": k4hat.se,
                       "kappa4_pass": k4hat.within(k4.value) if k4.is_exact else None,
                       "var_hat": var.estimate, "var_se": var.se, "var_pass": var.within(1.0),
                       "abs_mean": absm.estimate, "abs_mean_se": absm.se}
                if k4.is_exact:
                    for key, tf in (("g", g), ("h", h)):
                        low = simulate.empirical_distance_lower(samples, tf, seed)
                        pred = stein.edgeworth_prediction(k3, k4.value, tf)
                        row.update({f"{key}_lower": low.estimate, f"{key}_se": low.se,
                                    f"{key}_prediction": pred,
                                    f"{key}_pass": edgeworth_band(low, pred)})
                rows.append(row)
                ok &= all(row.get(k) is not False for k in SIMULATE_COLUMNS if k.endswith("_pass"))
    return rows, ok


RATE_COLUMNS = ("q", "H", "quantity", "exponent", "log_power", "regime", "slope",
                "half_width", "tolerance", "label", "passed", "error")


def cmd_rates(cfg: dict, out_dir: Path | None = None) -> tuple[list[dict], bool]:
    ns3 = parse_n_grid(cfg["n_grid"])
    ns4 = parse_n_grid(cfg["n_grid4"])
    rows, ok = [], True
    for q in cfg["q"]:
        q = int(q)
        for hurst in cfg["hurst"]:
            try:
                rep = rates.rate_report(q, hurst, ns3, ns4)
            except rates.RegimeError as exc:
                rows.append({"q": q, "H": hurst, "quantity": "error", "passed": False, "error": str(exc)})
                ok = False
                continue
            verdicts = [("kappa3", rep.kappa3), ("kappa4_lower", rep.kappa4_lower),
                        ("kappa4_upper", rep.kappa4_upper)]
            for name, v in verdicts:
                if v is None:
                    continue
                rows.append({"q": q, "H": hurst, "quantity": name,
                             "exponent": float(v.law.exponent), "log_power": v.law.log_power,
                             "regime": v.law.regime, "slope": v.slope, "half_width": v.half_width,
                             "tolerance": v.tolerance, "label": v.label, "passed": v.passed})
                ok &= v.passed
                if cfg["plot_data"] and out_dir is not None:
                    ns, vals = rep.data[name]
                    path = out_dir / f"rates_plot_q{q}_H{hurst:g}_{name}.csv"
                    path.write_text(rates.plot_data_csv(ns, vals, v))
            if q >= 6 and q % 2 == 0:
                s = rates.surprise_check(q, hurst, rep.kappa3.slope,
                                         (rep.kappa4_lower.slope, rep.kappa4_upper.slope))
                confirmed = s.confirmed if s.surprise else not s.confirmed
                rows.append({"q": q, "H": hurst, "quantity": "surprise",
                             "exponent": float(s.gap), "regime": "kappa4-slower" if s.surprise else "kappa3-slower",
                             "slope": min(s.fitted4) - s.fitted3, "passed": confirmed})
                ok &= confirmed
    return rows, ok


LIMIT_COLUMNS = ("q", "H", "model", "quantity", "limit", "n", "scaled_exact", "rel_gap", "error")


def cmd_limits(cfg: dict) -> tuple[list[dict], bool]:
    rows, ok = [], True
    ns = parse_n_grid(cfg["n_grid"])
    for q in cfg["q"]:
        q = int(q)
        for model in _models(cfg):
            jobs = []
            if q % 2 == 0:
                jobs.append(("sqrt_n_kappa3", lambda m=model: rates.limit_kappa3(q, m),
                             lambda s: math.sqrt(s.n) * cu.kappa3(s)))
            if q == 2:
                jobs.append(("n_kappa4", lambda m=model: rates.limit_kappa4_q2(m),
                             lambda s: s.n * cu.kappa4(s).value))
            if not jobs:
                rows.append({"q": q, "H": _hurst(model), "model": model.label,
                             "error": "no limit constant for this q"})
                ok = False
            for name, limit, scaled in jobs:
                base = {"q": q, "H": _hurst(model), "model": model.label, "quantity": name}
                try:
                    lim = limit()
                except rates.RegimeError as exc:
                    rows.append({**base, "error": str(exc)})
                    ok = False
                    continue
                rows.append({**base, "limit": lim})
                for n in ns:
                    val = scaled(ChaosSumSpec(q, n, model))
                    rows.append({**base, "limit": lim, "n": n, "scaled_exact": val,
                                 "rel_gap": abs(val - lim) / abs(lim)})
    return rows, ok


VERIFY_COLUMNS = ("name", "passed", "value", "detail")


def cmd_verify(cfg: dict) -> tuple[list[dict], bool]:
    report = run_verify(include_inequalities=not cfg["skip_inequalities"])
    for c in report.checks:
        print(c.line())
    return [c.to_dict() for c in report.checks], report.passed


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


COMMAND_KEYS = {
    "cumulants": ("q", "hurst", "table", "n_grid", "n_exact", "format"),
    "simulate": ("q", "hurst", "table", "n_grid", "n_exact", "reps", "seed", "workers", "dump", "format"),
    "rates": ("q", "hurst", "n_grid", "n_grid4", "plot_data", "format"),
    "limits": ("q", "hurst", "table", "n_grid", "format"),
    "verify": ("skip_inequalities", "format"),
}


def embedded_config(cfg: dict) -> dict:
    """The keys that influence ``cfg['command']``, in sorted order."""
    keys = ("command",) + COMMAND_KEYS[cfg["command"]]
    return {k: cfg[k] for k in sorted(keys)}


def render(cfg: dict, columns, rows, passed: bool) -> str:
    conf = embedded_config(cfg)
    if cfg["format"] == "json":
        doc = {"version": __version__, "config": conf, "passed": passed,
               "columns": list(columns), "rows": [{c: r.get(c) for c in columns} for r in rows]}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# chaosrate {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(conf), sort_keys=True) + "\n")
    buf.write(f"# passed: {_fmt(passed)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"chaosrate {args.command}: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if cfg["command"] == "cumulants":
            rows, ok = cmd_cumulants(cfg)
            columns = CUMULANT_COLUMNS
        elif cfg["command"] == "simulate":
            rows, ok = cmd_simulate(cfg, out_dir)
            columns = SIMULATE_COLUMNS
        elif cfg["command"] == "rates":
            rows, ok = cmd_rates(cfg, out_dir)
            columns = RATE_COLUMNS
        elif cfg["command"] == "limits":
            rows, ok = cmd_limits(cfg)
            columns = LIMIT_COLUMNS
        else:
            rows, ok = cmd_verify(cfg)
            columns = VERIFY_COLUMNS
    except (ValueError, ArithmeticError) as exc:
        print(f"chaosrate {cfg['command']}: {exc}", file=sys.stderr)
        return 2
    path = out_dir / f"{cfg['command']}.{cfg['format']}"
    path.write_text(render(cfg, columns, rows, ok))
    print(f"{'PASS' if ok else 'FAIL'}: wrote {path}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
