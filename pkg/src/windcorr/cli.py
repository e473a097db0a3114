"""Command-line entry point.

Exit codes: 0 success, 1 I/O or runtime failure, 2 validation failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .calib import AblParams, abl_calibrate
from .config import RunConfig, config_from_dict, grid_from_file, load_config, load_series, synth_grid
from .errors import ValidationError, WindcorrError
from .evalrun import SweepResult, compare_sites, run_cell, sweep
from .models import TrainConfig
from .stats import DEFAULT_MAX_LAG, CorrelationReport, analyze, learnability_rank
from .windgrid import REGIONS, SynthParams, ingest_csv, read_windpack_header, synth_field, write_windpack

log = logging.getLogger("windcorr")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _out_dir(args, default: str) -> Path:
    out = Path(args.out) if args.out else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _abl_from_args(args) -> AblParams | None:
    if getattr(args, "no_abl", False):
        return None
    return AblParams(args.y0, args.y_ref, args.y_target)


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    if args.csv:
        if not Path(args.csv).is_dir():
            raise ValidationError(f"CSV directory not found: {args.csv}")
        if not args.grid:
            raise ValidationError("--csv needs --grid")
        series = ingest_csv(args.csv, grid_from_file(args.grid), altitude=args.altitude)
    else:
        spec = {"grid_size": args.size}
        if args.grid:
            grid = grid_from_file(args.grid)
        else:
            grid = synth_grid({"region": args.region} if args.region else spec)
        series = synth_field(args.synth, grid, args.hours, args.seed, SynthParams(weight=args.weight),
                             altitude=args.altitude)
    target = Path(args.output)
    if args.out and not target.is_absolute():
        target = _out_dir(args, ".") / target
    target.parent.mkdir(parents=True, exist_ok=True)
    write_windpack(series, target)
    g = series.grid
    print(f"wrote {target}: grid {g.n_lat}x{g.n_lon} (prediction point {g.prediction_point}), "
          f"{series.n_time} hours from {series.start_time:%Y-%m-%dT%H:%MZ}, altitude {series.altitude:g} m")
    return 0


def cmd_inspect(args) -> int:
    print(json.dumps(read_windpack_header(args.path), indent=2, sort_keys=True))
    return 0


def _analysis(series, site, abl, max_lag):
    if abl is not None:
        series = abl_calibrate(series, abl)
    return analyze(series, site, max_lag)


def cmd_analyze(args) -> int:
    from .windgrid import read_windpack

    series = read_windpack(args.path)
    site = args.site or Path(args.path).stem
    report = _analysis(series, site, _abl_from_args(args), args.max_lag)
    out = _out_dir(args, f"runs/{site}/analysis")
    report.save(out)
    print(report.table_row())
    for S, (pu, pv) in sorted(report.heatmap.avg_by_gridsize.items()):
        print(f"  mean PCC {S}x{S} (excluding prediction point): u={pu:.3f} v={pv:.3f}")
    if report.acc_u.skipped or report.acc_v.skipped:
        print(f"  skipped zero-variance points: u={report.acc_u.skipped} v={report.acc_v.skipped}")
    return 0


def _find_report(path: Path) -> CorrelationReport:
    for cand in (path, path / "report.json", path / "analysis" / "report.json"):
        if cand.is_file():
            return CorrelationReport.load(cand)
    raise ValidationError(f"no report.json under {path}")


def cmd_rank(args) -> int:
    reports = [_find_report(Path(p)) for p in args.reports]
    order = learnability_rank(reports)
    for rep in sorted(reports, key=lambda r: order.index(r.site)):
        print(rep.table_row())
    print("order: " + ", ".join(order))
    return 0


def _train_config(args, base: TrainConfig = TrainConfig()) -> TrainConfig:
    kw = asdict(base)
    for key in ("lr", "batch_size", "epochs", "huber_delta"):
        if getattr(args, key, None) is not None:
            kw[key] = getattr(args, key)
    if getattr(args, "patience", None) is not None:
        kw["patience"] = None if args.patience <= 0 else args.patience
    return TrainConfig(**kw)


def cmd_train(args) -> int:
    from .windgrid import read_windpack

    series = read_windpack(args.path)
    site = args.site or Path(args.path).stem
    out = _out_dir(args, f"runs/{site}/train_{args.variant}_T{args.T}_S{args.S}")
    tconf = _train_config(args)
    abl = _abl_from_args(args)
    snapshot = {"command": "train", "windpack": str(Path(args.path).resolve()), "variant": args.variant,
                "T": args.T, "S": args.S, "seed": args.seed, "train": asdict(tconf),
                "abl": asdict(abl) if abl else None}
    _write_json(out / "config.json", snapshot)
    cell, model, hist, stats = run_cell(series, args.variant, args.T, args.S, args.seed, tconf, abl, cell_dir=out)
    _write_json(out / "metrics.json", {"split": "test", **asdict(cell)})
    print(f"{site} {args.variant} T={args.T} S={args.S}: test R^2 (paper) u={cell.r2_u:.4f} v={cell.r2_v:.4f}; "
          f"(standard) u={cell.r2_std_u:.4f} v={cell.r2_std_v:.4f}; epochs={cell.epochs}")
    print(f"checkpoint: {out / 'model.wck'}  history: {out / 'history.csv'}")
    return 0


def _sweep_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.path:
            raise ValidationError("sweep needs --config or a windpack path")
        cfg = config_from_dict({"site": args.site or Path(args.path).stem,
                                "data": {"windpack": str(Path(args.path).resolve())}})
    if args.seed is not None and args.seed_given:
        cfg.seed = args.seed
    if args.T_set:
        cfg.T_set = tuple(args.T_set)
    if args.S_set:
        cfg.S_set = tuple(args.S_set)
    if args.variants:
        cfg.variants = tuple(args.variants.split(","))
    if args.threads_given:
        cfg.threads = args.threads
    cfg.train = _train_config(args, cfg.train)
    if args.out:
        cfg.out = str(Path(args.out).resolve())
    return cfg.validate()


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    out = Path(cfg.out or f"runs/{cfg.site}")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg.to_dict())
    series = load_series(cfg.data, cfg.seed)
    report = _analysis(series, cfg.site, cfg.abl, cfg.max_lag)
    report.save(out / "analysis")
    print(report.table_row())
    results = sweep(series, cfg.site, cfg.variants, cfg.T_set, cfg.S_set, cfg.seed, cfg.train, cfg.abl,
                    mode=cfg.mode, threads=cfg.threads, run_dir=out)
    n_ok = 0
    for res in results:
        res.save(out / res.variant)
        n_ok += len(res.entries)
        print(f"[{res.variant}] test R^2 ({res.mode}), u:")
        print(res.table_csv("u"), end="")
        print(f"[{res.variant}] test R^2 ({res.mode}), v:")
        print(res.table_csv("v"), end="")
        for (T, S), reason in sorted(res.failures.items()):
            print(f"[{res.variant}] T={T} S={S} failed: {reason}")
        for c in res.caveats():
            print(f"[{res.variant}] caveat: {c}")
    if n_ok == 0:
        print("all sweep cells failed", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    sweeps, reports = [], []
    for d in (Path(p) for p in args.sites.split(",") if p):
        if not d.is_dir():
            raise ValidationError(f"site run directory not found: {d}")
        reports.append(_find_report(d))
        found = sorted(d.glob("*/sweep.json"))
        if not found:
            raise ValidationError(f"no <variant>/sweep.json under {d}")
        sweeps.extend(SweepResult.load(p) for p in found)
    summary = compare_sites(sweeps, reports, args.mode)
    out = _out_dir(args, "runs/report")
    _write_json(out / "summary.json", summary.to_dict())
    (out / "summary.txt").write_text(summary.text())
    print(summary.text(), end="")
    return 0


# ---------------------------------------------------------------- parser


class _Track(argparse.Action):
    """Store the value and remember that the user supplied it."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, self.dest + "_given", True)


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # Subcommand copies use SUPPRESS so they never clobber flags given before the subcommand.
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=d(0), action=_Track, help="master seed")
    g.add_argument("--out", default=d(None), help="run/output directory")
    g.add_argument("--config", default=d(None), help="run configuration (TOML or JSON)")
    g.add_argument("--threads", type=int, default=d(1), action=_Track, help="parallel sweep cells")
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    abl = argparse.ArgumentParser(add_help=False)
    abl.add_argument("--y0", type=float, default=AblParams.y0)
    abl.add_argument("--y-ref", type=float, default=AblParams.y_ref)
    abl.add_argument("--y-target", type=float, default=AblParams.y_target)
    abl.add_argument("--no-abl", action="store_true", help="skip height calibration")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--lr", type=float)
    training.add_argument("--batch-size", type=int)
    training.add_argument("--epochs", type=int)
    training.add_argument("--patience", type=int, help="early-stopping patience (0 disables)")
    training.add_argument("--huber-delta", type=float)

    p = argparse.ArgumentParser(prog="windcorr", description="Wind-field correlation analysis and CNN forecasting.",
                                parents=[_global_flags(suppress=False)])
    p.set_defaults(seed_given=False, threads_given=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="build a windpack from CSV hours or a synthetic recipe")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--synth", choices=("advective", "noise", "mixture"))
    src.add_argument("--csv", help="directory of YYYYMMDDTHH.csv files")
    s.add_argument("--grid", help="grid JSON (bounds, increments, prediction_point or prediction_latlon)")
    s.add_argument("--region", choices=sorted(REGIONS))
    s.add_argument("--size", type=int, default=13, help="synthetic grid side length (default 13)")
    s.add_argument("--hours", type=int, default=3000)
    s.add_argument("--weight", type=float, default=SynthParams.weight, help="noise weight for mixture")
    s.add_argument("--altitude", type=float, default=50.0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("inspect", parents=[common], help="print a windpack header")
    s.add_argument("path")
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("analyze", parents=[common, abl], help="ACC spread and PCC heatmaps for one site")
    s.add_argument("path")
    s.add_argument("--site")
    s.add_argument("--max-lag", type=int, default=DEFAULT_MAX_LAG)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("rank", parents=[common], help="order sites by learnability")
    s.add_argument("reports", nargs="+", help="report.json files or run directories")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("train", parents=[common, abl, training], help="train and test one model")
    s.add_argument("path")
    s.add_argument("--site")
    s.add_argument("--T", type=int, default=3)
    s.add_argument("--S", type=int, default=3)
    s.add_argument("--variant", default="cnn2d3d", choices=("cnn2d3d", "fully3d"))
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", parents=[common, training], help="grid-size x time-length sweep")
    s.add_argument("path", nargs="?")
    s.add_argument("--site")
    s.add_argument("--T-set", type=_ints)
    s.add_argument("--S-set", type=_ints)
    s.add_argument("--variants")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", parents=[common], help="join site sweeps with correlation reports")
    s.add_argument("--sites", required=True, help="comma-separated run directories")
    s.add_argument("--mode", choices=("paper", "standard"))
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, WindcorrError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
