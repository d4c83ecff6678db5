"""Command-line front end: exponent queries, sweeps, simulations, file I/O.

Exit codes: 0 success, 1 validation-failure or I/O/analysis error,
2 usage or parameter error.  All floating-point output carries 17
significant digits so CSV values round-trip exactly; every simulation
output embeds the master seed for audit.  Command-line flags override an
optional JSON config file passed with --config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .errors import OracleError, ParameterError, SignalFileError
from .detector import detect
from .embedder import embed_optimal
from .exponents import (
    ExponentReport,
    fn_exponent_closed_form,
    fn_exponent_oracle,
    positivity_thresholds,
)
from .model import HostSignal, SystemParams, WatermarkSequence, derive_geometry, generate_watermark
from .simulate import (
    TrialConfig,
    derived_master_seed,
    exponent_convergence_sweep,
    simulate_fn,
    simulate_fp,
)
from .sphere import exact_fp_probability_log

DEFAULT_SEED = 20260809
SWEEP_HEADER = ["axis_value", "e_fn", "r_star", "q_star", "method"]
SIMULATE_HEADER = [
    "n",
    "trials",
    "failures",
    "p_hat",
    "ci_low",
    "ci_high",
    "empirical_exponent",
    "theory_exponent",
    "master_seed",
]
COMPARE_HEADER = [
    "lambda",
    "e_fn_theory",
    "emp_exponent_optimal",
    "emp_exponent_sign",
    "lambda1",
    "lambda2",
]

# Oracle-equivalence grid shared by `validate` and the acceptance suite.
VALIDATION_GRID = {
    "lambda": (0.1, 0.3, 0.6, 1.0),
    "sz2": (0.1, 0.5, 1.0, 2.0),
    "D": (0.5, 1.0, 2.0),
    "sx2": (1.0,),
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".conemark-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv_atomic(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _write_text_atomic(path, buf.getvalue())


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ParameterError("config file must hold a JSON object")
    return config


_CONFIG_KEYS = {"lam": "lambda"}


def _resolve(args, config: dict, dest: str, cast=float, default=None, required=False):
    value = getattr(args, dest, None)
    if value is None:
        value = config.get(_CONFIG_KEYS.get(dest, dest))
    if value is None:
        if required:
            flag = "--" + _CONFIG_KEYS.get(dest, dest).replace("_", "-")
            raise ParameterError(f"missing required parameter {flag}")
        return default
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"bad value for {dest}: {value!r}") from exc


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(part) for part in str(text).split(",") if part.strip()]


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(part) for part in str(text).split(",") if part.strip()]


def _system_params(args, config, require_distortion=True) -> SystemParams:
    # False-positive experiments never touch the distortion budget; keep a
    # placeholder so the shared parameter type stays valid.
    return SystemParams(
        host_variance=_resolve(args, config, "sx2", required=True),
        attack_variance=_resolve(args, config, "sz2", required=False, default=0.0),
        distortion=_resolve(args, config, "D", required=require_distortion, default=1.0),
        fp_exponent=_resolve(args, config, "lam", required=True),
    )


def _exponent_json(report: ExponentReport, seed=None) -> str:
    payload = {
        "e_fn": _json_safe(report.e_fn),
        "r_star": _json_safe(report.r_star),
        "q_star": _json_safe(report.q_star),
        "method": report.method,
        "zero_reason": report.zero_reason,
        "seed": seed,
    }
    return json.dumps(payload)


def _read_signal_file(path: str) -> np.ndarray:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise SignalFileError(f"not a number: {text!r}", line=lineno) from None
    if not values:
        raise SignalFileError(f"no samples in {path}")
    return np.asarray(values, dtype=np.float64)


def _watermark_from_args(args, config, n: int) -> tuple[WatermarkSequence, int | None]:
    seed = _resolve(args, config, "watermark_seed", cast=int, required=False)
    path = getattr(args, "watermark_file", None) or config.get("watermark_file")
    if path:
        values = _read_signal_file(path)
        if values.shape[0] != n:
            raise ParameterError(
                f"watermark length {values.shape[0]} does not match signal length {n}"
            )
        return WatermarkSequence(n=n, values=values, seed=0), None
    if seed is None:
        raise ParameterError("provide --watermark-seed or --watermark-file")
    return generate_watermark(n, seed), seed


# ----------------------------------------------------------------- commands


def _cmd_exponent(args) -> int:
    config = _load_config(args.config)
    params = _system_params(args, config)
    print(_exponent_json(fn_exponent_closed_form(params)))
    return 0


def _sweep_rows(axis: str, values, fixed: dict) -> list[list]:
    rows = []
    for value in values:
        assignment = dict(fixed)
        assignment[axis] = float(value)
        params = SystemParams(
            host_variance=assignment["sx2"],
            attack_variance=assignment["sz2"],
            distortion=assignment["D"],
            fp_exponent=assignment["lambda"],
        )
        report = fn_exponent_closed_form(params)
        rows.append([float(value), report.e_fn, report.r_star, report.q_star, report.method])
    return rows


_SWEEP_PRESETS = {
    # axis, (start, stop, points), fixed parameters, series key, series values
    "fig2": ("lambda", (0.01, 1.5, 60), {"sx2": 1.0, "D": 2.0}, "sz2", (0.0, 0.25, 0.5, 1.0)),
    "fig3": ("sz2", (0.0, 2.0, 60), {"sx2": 1.0, "lambda": 0.1}, "D", (0.5, 1.0, 2.0)),
    "fig4": ("sx2", (0.25, 3.0, 60), {"sz2": 1.0, "lambda": 0.1}, "D", (0.5, 1.0, 2.0)),
}


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.preset:
        if args.preset not in _SWEEP_PRESETS:
            raise ParameterError(f"unknown sweep preset {args.preset!r}")
        axis, (start, stop, points), fixed, series_key, series_values = _SWEEP_PRESETS[
            args.preset
        ]
        points = _resolve(args, config, "points", cast=int, default=points)
        out_dir = args.output_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        grid = np.linspace(start, stop, points)
        for series_value in series_values:
            fixed_assignment = dict(fixed)
            fixed_assignment[series_key] = series_value
            rows = _sweep_rows(axis, grid, fixed_assignment)
            name = f"{args.preset}_{series_key}_{series_value:g}.csv"
            _write_csv_atomic(os.path.join(out_dir, name), SWEEP_HEADER, rows)
            print(os.path.join(out_dir, name))
        return 0

    axis = _resolve(args, config, "axis", cast=str, required=True)
    if axis not in ("lambda", "sz2", "sx2", "D"):
        raise ParameterError(f"unknown sweep axis {axis!r}")
    start = _resolve(args, config, "start", required=True)
    stop = _resolve(args, config, "stop", required=True)
    points = _resolve(args, config, "points", cast=int, required=True)
    if not (start < stop):
        raise ParameterError("sweep needs start < stop")
    if points < 2:
        raise ParameterError("sweep needs at least 2 points")
    fixed = {}
    for key, dest in (("sx2", "sx2"), ("sz2", "sz2"), ("D", "D"), ("lambda", "lam")):
        if key != axis:
            fixed[key] = _resolve(args, config, dest, required=True)
    output = _resolve(args, config, "output", cast=str, required=True)
    rows = _sweep_rows(axis, np.linspace(start, stop, points), fixed)
    _write_csv_atomic(output, SWEEP_HEADER, rows)
    return 0


def _theory_exponent(mode: str, n: int, params: SystemParams) -> float:
    if mode == "fn":
        return fn_exponent_closed_form(params).e_fn
    geometry = derive_geometry(params.fp_exponent)
    return -exact_fp_probability_log(n, geometry) / n


def _simulate_rows(mode, params, n_list, trials, seed, embedder, workers, pin) -> list[list]:
    rows = []
    multi = len(n_list) > 1
    for n in n_list:
        batch_seed = derived_master_seed(seed, n) if multi else seed
        config = TrialConfig(
            n=n,
            trials=trials,
            params=params,
            embedder=embedder if mode == "fn" else "none",
            master_seed=batch_seed,
            pinned_watermark_seed=pin,
        )
        run = simulate_fn if mode == "fn" else simulate_fp
        result = run(config, workers=workers)
        rows.append(
            [
                n,
                result.trials,
                result.failures,
                result.p_hat,
                result.ci_low,
                result.ci_high,
                result.empirical_exponent,
                _theory_exponent(mode, n, params),
                result.master_seed,
            ]
        )
    return rows


_SIMULATE_PRESETS = {
    # fixed params, series key, series values, n list
    "fig5": ({"D": 2.0, "sx2": 1.0, "lambda": 0.6}, "sz2", (0.52, 0.53, 0.54, 0.55)),
    "fig6": ({"D": 0.75, "sx2": 1.0, "sz2": 0.0}, "lambda", (0.58, 0.6, 0.62, 0.64)),
}
_PRESET_N_LIST = (100, 200, 400, 800)


def _emit_simulation(args, rows, output) -> None:
    if args.format == "json":
        payload = [
            {key: _json_safe(value) for key, value in zip(SIMULATE_HEADER, row)}
            for row in rows
        ]
        text = json.dumps(payload, indent=2) + "\n"
        if output:
            _write_text_atomic(output, text)
        else:
            sys.stdout.write(text)
        return
    if output:
        _write_csv_atomic(output, SIMULATE_HEADER, rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(SIMULATE_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    trials = _resolve(args, config, "trials", cast=int, default=None)
    seed = _resolve(args, config, "seed", cast=int, default=DEFAULT_SEED)
    workers = _resolve(args, config, "workers", cast=int, default=1)
    pin = _resolve(args, config, "pin_watermark_seed", cast=int, required=False)

    if args.preset:
        if args.preset not in _SIMULATE_PRESETS:
            raise ParameterError(f"unknown simulate preset {args.preset!r}")
        if args.mode != "fn":
            raise ParameterError("presets fig5/fig6 are false-negative experiments")
        fixed, series_key, series_values = _SIMULATE_PRESETS[args.preset]
        n_list = _resolve(args, config, "n_list", cast=_int_list, default=list(_PRESET_N_LIST))
        trials = trials if trials is not None else 100_000
        out_dir = args.output_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        for series_value in series_values:
            assignment = dict(fixed)
            assignment[series_key] = series_value
            params = SystemParams(
                host_variance=assignment["sx2"],
                attack_variance=assignment["sz2"],
                distortion=assignment["D"],
                fp_exponent=assignment["lambda"],
            )
            rows = _simulate_rows(
                "fn", params, n_list, trials, seed, args.embedder, workers, pin
            )
            name = f"{args.preset}_{series_key}_{series_value:g}.csv"
            _write_csv_atomic(os.path.join(out_dir, name), SIMULATE_HEADER, rows)
            print(os.path.join(out_dir, name))
        return 0

    params = _system_params(args, config, require_distortion=(args.mode == "fn"))
    n_list = _resolve(args, config, "n_list", cast=_int_list, default=None)
    if n_list is None:
        n = _resolve(args, config, "n", cast=int, required=True)
        n_list = [n]
    if trials is None:
        raise ParameterError("missing required parameter --trials")
    rows = _simulate_rows(
        args.mode, params, n_list, trials, seed, args.embedder, workers, pin
    )
    _emit_simulation(args, rows, _resolve(args, config, "output", cast=str, required=False))
    return 0


def _cmd_compare(args) -> int:
    config = _load_config(args.config)
    if args.preset == "fig7":
        lambdas = [round(v, 10) for v in np.linspace(0.05, 1.4, 12)]
        distortion, sx2, sz2 = 2.0, 1.0, 0.0
        n = _resolve(args, config, "n", cast=int, default=512)
        trials = _resolve(args, config, "trials", cast=int, default=10_000)
        out_dir = args.output_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        output = os.path.join(out_dir, "fig7.csv")
    elif args.preset:
        raise ParameterError(f"unknown compare preset {args.preset!r}")
    else:
        lambdas = _resolve(args, config, "lambda_list", cast=_float_list, required=True)
        distortion = _resolve(args, config, "D", required=True)
        sx2 = _resolve(args, config, "sx2", required=True)
        sz2 = _resolve(args, config, "sz2", default=0.0)
        n = _resolve(args, config, "n", cast=int, required=True)
        trials = _resolve(args, config, "trials", cast=int, required=True)
        output = _resolve(args, config, "output", cast=str, required=True)
    seed = _resolve(args, config, "seed", cast=int, default=DEFAULT_SEED)
    workers = _resolve(args, config, "workers", cast=int, default=1)

    lam1, lam2 = positivity_thresholds(distortion, sx2)
    rows = []
    for index, lam in enumerate(lambdas):
        params = SystemParams(
            host_variance=sx2, attack_variance=sz2, distortion=distortion, fp_exponent=lam
        )
        theory = fn_exponent_closed_form(params).e_fn
        emp = {}
        for tag, embedder in (("optimal", "optimal"), ("sign", "sign")):
            batch_seed = int(
                np.random.SeedSequence(
                    entropy=seed, spawn_key=(index, 0 if embedder == "optimal" else 1)
                ).generate_state(1, dtype=np.uint64)[0]
            )
            result = simulate_fn(
                TrialConfig(
                    n=n,
                    trials=trials,
                    params=params,
                    embedder=embedder,
                    master_seed=batch_seed,
                ),
                workers=workers,
            )
            emp[tag] = result.empirical_exponent
        rows.append([lam, theory, emp["optimal"], emp["sign"], lam1, lam2])
    _write_csv_atomic(output, COMPARE_HEADER, rows)
    if args.preset:
        print(output)
    return 0


def _cmd_validate(args) -> int:
    tol = args.tol
    if tol is None:
        tol = 1e-6
    if not (tol > 0) or not math.isfinite(tol):
        raise ParameterError(f"tol must be > 0, got {tol}")
    worst = (0.0, None)
    for sx2 in VALIDATION_GRID["sx2"]:
        for lam in VALIDATION_GRID["lambda"]:
            for sz2 in VALIDATION_GRID["sz2"]:
                for distortion in VALIDATION_GRID["D"]:
                    params = SystemParams(
                        host_variance=sx2,
                        attack_variance=sz2,
                        distortion=distortion,
                        fp_exponent=lam,
                    )
                    gap = abs(
                        fn_exponent_closed_form(params).e_fn
                        - fn_exponent_oracle(params).e_fn
                    )
                    if gap > worst[0]:
                        worst = (gap, (distortion, sx2, sz2, lam))
    gap, point = worst
    print(f"max |closed-form - oracle| = {gap:.3e} over {4 * 4 * 3} grid points")
    if gap >= tol:
        print(
            "FAIL at D={} sx2={} sz2={} lambda={} (tol {:g})".format(*point, tol),
            file=sys.stderr,
        )
        return 1
    print(f"OK (tol {tol:g})")
    return 0


def _cmd_embed(args) -> int:
    config = _load_config(args.config)
    samples = _read_signal_file(args.input)
    n = samples.shape[0]
    host = HostSignal(n=n, samples=samples)
    watermark, seed = _watermark_from_args(args, config, n)
    distortion = _resolve(args, config, "D", required=True)
    geometry = derive_geometry(_resolve(args, config, "lam", required=True))
    result = embed_optimal(host, watermark, distortion, geometry)
    output = _resolve(args, config, "output", cast=str, required=True)
    _write_text_atomic(output, "".join(f"{v:.17g}\n" for v in result.y))
    sidecar = args.sidecar or output + ".json"
    meta = {
        "a": result.a,
        "b": result.b,
        "r": result.coords.r,
        "alpha": result.coords.alpha,
        "distortion_used": result.distortion_used,
        "branch": result.branch,
        "n": n,
        "seed": seed,
    }
    _write_text_atomic(sidecar, json.dumps(meta) + "\n")
    return 0


def _cmd_detect(args) -> int:
    config = _load_config(args.config)
    samples = _read_signal_file(args.input)
    n = samples.shape[0]
    watermark, seed = _watermark_from_args(args, config, n)
    geometry = derive_geometry(_resolve(args, config, "lam", required=True))
    report = detect(samples, watermark, geometry)
    payload = {
        "rho_abs": report.rho_abs,
        "empirical_mi": _json_safe(report.empirical_mi),
        "threshold": report.threshold,
        "decision": report.decision,
        "n": n,
        "seed": seed,
    }
    print(json.dumps(payload))
    return 0


# ------------------------------------------------------------------ parser


def _add_param_flags(parser, *, sz2=True):
    parser.add_argument("--D", type=float, help="distortion budget per dimension")
    parser.add_argument("--sx2", type=float, help="host variance")
    if sz2:
        parser.add_argument("--sz2", type=float, help="attack noise variance")
    parser.add_argument("--lambda", dest="lam", type=float, help="false-positive exponent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conemark",
        description="One-bit watermark exponents, embedding and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponent", help="print the false-negative exponent as JSON")
    _add_param_flags(p)
    p.add_argument("--config", help="JSON config file (flags override)")
    p.set_defaults(func=_cmd_exponent)

    p = sub.add_parser("sweep", help="CSV sweep of the exponent along one axis")
    _add_param_flags(p)
    p.add_argument("--axis", choices=["lambda", "sz2", "sx2", "D"])
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--output")
    p.add_argument("--preset", choices=sorted(_SWEEP_PRESETS))
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo error-probability batches")
    p.add_argument("mode", choices=["fn", "fp"])
    _add_param_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--n-list", dest="n_list")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--embedder", choices=["optimal", "sign"], default="optimal")
    p.add_argument("--workers", type=int)
    p.add_argument("--pin-watermark-seed", dest="pin_watermark_seed", type=int)
    p.add_argument("--output")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--preset", choices=sorted(_SIMULATE_PRESETS))
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "compare-embedders", help="optimal vs sign embedder across a lambda grid"
    )
    p.add_argument("--D", type=float)
    p.add_argument("--sx2", type=float)
    p.add_argument("--sz2", type=float)
    p.add_argument("--lambda-list", dest="lambda_list")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--preset", choices=["fig7"])
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("validate", help="closed form vs numeric oracle on the built-in grid")
    p.add_argument("--tol", type=float, help="maximum allowed deviation (default 1e-6)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("embed", help="embed a watermark into a CSV signal file")
    p.add_argument("--input", required=True, help="host signal, one real per line")
    p.add_argument("--output")
    p.add_argument("--sidecar", help="metadata JSON path (default: OUTPUT.json)")
    p.add_argument("--watermark-seed", dest="watermark_seed", type=int)
    p.add_argument("--watermark-file", dest="watermark_file")
    p.add_argument("--D", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("detect", help="run the detector on a CSV signal file")
    p.add_argument("--input", required=True)
    p.add_argument("--watermark-seed", dest="watermark_seed", type=int)
    p.add_argument("--watermark-file", dest="watermark_file")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_detect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, SignalFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
