"""Command-line interface: experiment runner and analysis utilities.

Subcommands:
  run        execute a declarative experiment config (YAML/JSON)
  analyze    inverse pipeline on a spectrum CSV -> JSON report
  ladder     excitation-ladder table -> CSV
  calibrate  Rabi-rate fits + drive calibration from a traces CSV
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import eigenstructure as ladder_mod
from .experiments import ExperimentConfig, run_experiment
from .pnr import analyze_spectrum, calibrate_drive, fit_rabi, load_spectrum_csv


def _parse_ladder_arg(text: str, n_max: int) -> np.ndarray:
    if text == "dispersive":
        return ladder_mod.dispersive_line_shifts(n_max)
    if text.startswith("resonant:"):
        try:
            n_emitters = int(text.split(":", 1)[1])
        except ValueError:
            raise SystemExit(f"bad ladder spec {text!r}; use resonant:<N>")
        return ladder_mod.resonant_line_shifts(n_emitters, n_max)
    raise SystemExit(f"unknown ladder {text!r}; use 'dispersive' or 'resonant:<N>'")


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.threads is not None:
        cfg = ExperimentConfig(kind=cfg.kind, system=cfg.system, params=cfg.params,
                               output=cfg.output, threads=args.threads, seed=cfg.seed)
    if args.truncation is not None:
        params = dict(cfg.params)
        params["truncation"] = args.truncation
        cfg = ExperimentConfig(kind=cfg.kind, system=cfg.system, params=params,
                               output=cfg.output, threads=cfg.threads, seed=cfg.seed)
    result = run_experiment(cfg)
    base = Path(args.out or cfg.output or cfg.kind)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    result.to_csv(csv_path)
    result.to_json(json_path)
    failed = sum(1 for r in result.records if r.get("error"))
    print(f"{cfg.kind}: {len(result.records)} grid points "
          f"({failed} failed) -> {csv_path}, {json_path}")
    return 0


def _cmd_analyze(args) -> int:
    shifts = _parse_ladder_arg(args.ladder, args.n_max)
    loaded = load_spectrum_csv(args.spectrum)
    spectra = {None: loaded} if not isinstance(loaded, dict) else loaded
    reports = {}
    for key, spectrum in sorted(spectra.items(), key=lambda kv: (kv[0] is not None, kv[0])):
        report = analyze_spectrum(spectrum, chi=args.chi, omega_w_tilde=args.omega_w,
                                  shifts=shifts, min_prominence=args.min_prominence)
        reports[key] = report
    payload = reports[None] if list(reports) == [None] else {
        "by_drive_amp_v": {f"{k:g}": v for k, v in reports.items()}
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"analysis -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_ladder(args) -> int:
    table = ladder_mod.build_ladder(args.N, args.n_max, omega_c=args.omega_c,
                                    omega_a=args.omega_a if args.omega_a else args.omega_c,
                                    g=args.g)
    if args.out:
        table.to_csv(args.out)
        print(f"ladder table -> {args.out}")
    else:
        sys.stdout.write(table.to_csv())
    return 0


def _cmd_calibrate(args) -> int:
    traces: dict[tuple[float, str], list[tuple[float, float]]] = {}
    with open(args.traces, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"time_us", "drive_amp_v", "branch", "population"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SystemExit(f"traces CSV needs columns {sorted(required)}")
        for row in reader:
            key = (float(row["drive_amp_v"]), row["branch"].strip())
            traces.setdefault(key, []).append(
                (float(row["time_us"]), float(row["population"])))

    fits = []
    for (amp, branch), points in sorted(traces.items()):
        points.sort()
        arr = np.array(points)
        fit = fit_rabi(arr[:, 0], arr[:, 1])
        fits.append({"drive_amp_v": amp, "branch": branch,
                     "rabi_rate_mhz": fit.rabi_rate, "fit_residual": fit.residual})

    payload = {"fits": fits, "calibration": {}}
    slopes = {}
    for branch in sorted({f["branch"] for f in fits}):
        rows = [f for f in fits if f["branch"] == branch]
        if len(rows) < 2:
            continue
        amps = np.array([r["drive_amp_v"] for r in rows])
        rates = np.array([r["rabi_rate_mhz"] for r in rows])
        cal = calibrate_drive(amps, rates)
        slopes[branch] = cal.slope
        payload["calibration"][branch] = {
            "slope_mhz_per_v": cal.slope,
            "used_points": cal.used_points,
            "residuals_mhz": cal.residuals.tolist(),
        }
    if len(slopes) == 2:
        quad = float(np.hypot(*slopes.values()))
        payload["calibration"]["eta_per_volt_quadrature"] = quad / 2.0
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"calibration -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcqed",
        description="Driven Tavis-Cummings simulations and PNR spectrum analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a declarative experiment config")
    p_run.add_argument("config", help="YAML or JSON experiment config")
    p_run.add_argument("--out", help="output base path (writes .csv and .json)")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--truncation", type=int, default=None,
                       help="override the cavity truncation n_max")
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="peaks -> P(n) -> g2 from a spectrum CSV")
    p_an.add_argument("spectrum", help="CSV: freq_ghz,response or freq_ghz,drive_amp_v,response")
    p_an.add_argument("--chi", type=float, required=True, help="dispersive shift chi in MHz")
    p_an.add_argument("--omega-w", type=float, required=True,
                      help="Lamb-shifted witness frequency in GHz (vacuum line)")
    p_an.add_argument("--ladder", default="dispersive",
                      help="'dispersive' or 'resonant:<N>' line ladder")
    p_an.add_argument("--n-max", type=int, default=12, help="highest photon line to predict")
    p_an.add_argument("--min-prominence", type=float, default=0.05,
                      help="peak prominence threshold as a fraction of the maximum")
    p_an.add_argument("--out", help="write the JSON report here instead of stdout")
    p_an.set_defaults(func=_cmd_analyze)

    p_ld = sub.add_parser("ladder", help="excitation-ladder table as CSV")
    p_ld.add_argument("--N", type=int, required=True, help="number of emitters")
    p_ld.add_argument("--n-max", type=int, default=6)
    p_ld.add_argument("--g", type=float, default=13.2, help="coupling in MHz")
    p_ld.add_argument("--omega-c", type=float, default=5230.0, help="cavity frequency in MHz")
    p_ld.add_argument("--omega-a", type=float, default=None,
                      help="emitter frequency in MHz (default: resonant)")
    p_ld.add_argument("--out", help="write CSV here instead of stdout")
    p_ld.set_defaults(func=_cmd_ladder)

    p_cal = sub.add_parser("calibrate", help="Rabi fits + drive calibration from traces CSV")
    p_cal.add_argument("traces", help="CSV: time_us,drive_amp_v,branch,population")
    p_cal.add_argument("--out", help="write the JSON report here instead of stdout")
    p_cal.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
