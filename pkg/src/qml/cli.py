"""Command-line entry point.

Every subcommand computes in memory, then writes ``report.json`` and
``profiles/*.csv`` under ``--out``.  Exit status: 0 when every verification
passes, 1 when one fails, 2 on input errors (nothing is written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from . import __version__
from . import verify as V
from .compress import DegreeBudgetError, build_frame, commutator, compress_coordinate, compress_general
from .jpower import b_basis
from .poly import ThetaDirection
from .spec_io import (
    EXPERIMENTS,
    IdealSpec,
    RunConfig,
    SpecError,
    load_ideal_spec,
    parse_complex_list,
    parse_polynomial,
    parse_run_config,
    parse_tolerances,
)
from .spectral import (
    SpectralProfile,
    essential_spectrum_probe,
    plateau_verdict,
    profile,
    schatten_1inf_indicator,
)

SCHEMA = "qml-report/1"
DEFAULT_D = 20


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# JSON / CSV


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def report_dict(r: V.VerificationReport) -> dict:
    out = asdict(r)
    out["passed"] = r.passed
    return jsonable(out)


def profile_csv(prof: SpectralProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["degree", "index", "singular_value", "trusted"])
    for deg, idx, sv, ok in prof.rows():
        w.writerow([deg, idx, "%.17g" % sv, int(ok)])
    return buf.getvalue()


class Result:
    """Reports and profiles produced by one experiment."""

    def __init__(self, name: str):
        self.name = name
        self.reports: list[V.VerificationReport] = []
        self.profiles: dict[str, SpectralProfile] = {}
        self.data: dict[str, Any] = {}


# ---------------------------------------------------------------------------
# experiments


def _need_spec(spec: IdealSpec | None, name: str) -> IdealSpec:
    if spec is None:
        raise InputError(f"{name}: --spec is required")
    return spec


def _need_jpower(spec: IdealSpec | None, name: str) -> tuple[int, int, ThetaDirection]:
    spec = _need_spec(spec, name)
    if spec.presets is None or spec.components:
        raise InputError(f"{name}: needs a spec consisting of a j_theta or j_theta_power preset")
    return spec.d, spec.power(), spec.theta()


def _poly_arg(params: dict, key: str, d: int, default: str | None = None):
    text = params.get(key, default)
    if text is None:
        raise InputError(f"missing --{key.replace('_', '-')}")
    return parse_polynomial(text, d)


def _homogeneous(parts, key: str):
    if len(parts) != 1:
        raise InputError(f"--{key} must be a non-zero homogeneous polynomial")
    return parts[0]


def _tol(params: dict, claim: str, default: float) -> float:
    return params["tolerances"].get(claim, default)


def exp_dims(spec, D, params) -> Result:
    spec = _need_spec(spec, "dims")
    res = Result("dims")
    dims = spec.ideal().hilbert_dims(D)
    res.data = {
        "d": spec.d,
        "D": D,
        "ideal_dims": [a for a, _ in dims],
        "quotient_dims": [b for _, b in dims],
    }
    return res


def exp_compress(spec, D, params) -> Result:
    spec = _need_spec(spec, "compress")
    frame = build_frame(spec.ideal(), D)
    op = compress_general(_poly_arg(params, "poly", spec.d), frame)
    prof = profile(op)
    res = Result("compress")
    res.profiles["compress"] = prof
    res.data = {"poly": params["poly"], "norm": op.norm(), "block_norms": prof.block_norms()}
    return res


def exp_commutator(spec, D, params) -> Result:
    spec = _need_spec(spec, "commutator")
    i, j = params.get("i", 0), params.get("j", 0)
    if not (0 <= i < spec.d and 0 <= j < spec.d):
        raise InputError(f"coordinates must lie in 0..{spec.d - 1}")
    frame = build_frame(spec.ideal(), D)
    C = commutator(compress_coordinate(i, frame), compress_coordinate(j, frame))
    prof = profile(C)
    ind_max, table = schatten_1inf_indicator(prof)
    res = Result("commutator")
    res.profiles[f"commutator_{i}_{j}"] = prof
    res.data = {
        "i": i,
        "j": j,
        "block_norms": prof.block_norms(),
        "cumulative_trace": prof.cumulative_trace(),
        "cumulative_abs": prof.cumulative_abs(),
        "indicator_max": ind_max,
        "indicator": table,
        "verdict": plateau_verdict(table),
    }
    return res


def exp_trace_formula(spec, D, params) -> Result:
    d, N, theta = _need_jpower(spec, "trace-formula")
    f1 = _homogeneous(_poly_arg(params, "f1", d, "z1"), "f1")
    f2 = _homogeneous(_poly_arg(params, "f2", d, "z1"), "f2")
    res = Result("trace-formula")
    res.reports.append(
        V.verify_trace_formula(d, N, f1, f2, D, tol=_tol(params, "trace-formula", V.TOL_TRACE), theta=theta)
    )
    return res


def exp_shift_coeffs(spec, D, params) -> Result:
    d, N, _ = _need_jpower(spec, "shift-coeffs")
    m, n = params.get("m"), params.get("n")
    res = Result("shift-coeffs")
    pairs = [(m, n)] if m is not None and n is not None else [
        (mm, nn) for mm in range(N) for nn in range(mm)
    ]
    if not pairs:
        raise InputError("shift-coeffs needs N >= 2 (no pair n < m <= N-1)")
    k_max = params.get("k_max") or D
    sign = params.get("sign", "corrected")
    coords = [params["i"]] if params.get("i") is not None else list(range(d))
    tol = _tol(params, "shift-coeffs", 1e-8)
    for mm, nn in pairs:
        for i in coords:
            for fi in range(len(b_basis(d, mm))):
                for gi in range(len(b_basis(d, nn))):
                    res.reports.append(
                        V.verify_shift_coefficients(d, N, mm, nn, i, fi, gi, k_max, tol=tol, sign=sign)
                    )
    return res


def exp_zero_blocks(spec, D, params) -> Result:
    d, N, _ = _need_jpower(spec, "zero-blocks")
    res = Result("zero-blocks")
    res.reports.append(
        V.verify_zero_blocks(d, N, params.get("i"), D, tol=_tol(params, "zero-blocks", V.TOL_EQUALITY))
    )
    return res


def exp_module_map(spec, D, params) -> Result:
    d, N, _ = _need_jpower(spec, "module-map")
    f = None
    if params.get("poly"):
        f = _homogeneous(parse_polynomial(params["poly"], d), "poly")
    res = Result("module-map")
    res.reports.append(
        V.verify_rg_module_map(
            d, N, f, params.get("samples", 50), seed=params["seed"],
            tol=_tol(params, "module-map", V.TOL_EQUALITY),
        )
    )
    return res


def exp_asym_orth(spec, D, params) -> Result:
    try:
        ti = ThetaDirection(tuple(parse_complex_list(params["theta_i"])))
        tj = ThetaDirection(tuple(parse_complex_list(params["theta_j"])))
    except KeyError as exc:
        raise InputError(f"asym-orth needs --{exc.args[0].replace('_', '-')}") from None
    res = Result("asym-orth")
    res.reports.append(
        V.verify_asymptotic_orthogonality(
            ti, tj, params.get("k_max") or min(D, 40), tol=_tol(params, "asym-orth", 1e-12)
        )
    )
    return res


def exp_nonnormal(spec, D, params) -> Result:
    spec = _need_spec(spec, "nonnormal-demo")
    control = params.get("control_spec")
    control_ideal = load_ideal_spec(control).ideal() if control else None
    res = Result("nonnormal-demo")
    r = V.nonnormality_demo(spec.ideal(), D, control=control_ideal,
                            floor=_tol(params, "nonnormal-demo", 0.1))
    res.reports.append(r)
    return res


def exp_boundary(spec, D, params) -> Result:
    spec = _need_spec(spec, "boundary-witness")
    parts = _poly_arg(params, "poly", spec.d)
    res = Result("boundary-witness")
    res.reports.append(
        V.boundary_witness(spec.component_ideals(), parts, D,
                           tail_ratio=_tol(params, "boundary-witness", 0.1))
    )
    return res


def exp_spectrum_probe(spec, D, params) -> Result:
    spec = _need_spec(spec, "spectrum-probe")
    lam = parse_complex_list(params.get("lam") or ",".join(["1"] * spec.d))
    if len(lam) != spec.d:
        raise InputError(f"--lam has {len(lam)} entries, d={spec.d}")
    starts = params.get("tail_starts") or list(range(5, D - 1, 5))
    frame = build_frame(spec.ideal(), D)
    values = {}
    for t in starts:
        try:
            values[t] = essential_spectrum_probe(lam, frame, t)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    res = Result("spectrum-probe")
    res.data = {"lambda": lam, "probe": [{"tail_start": t, "value": v} for t, v in values.items()]}
    return res


RUNNERS: dict[str, Callable[[IdealSpec | None, int, dict], Result]] = {
    "dims": exp_dims,
    "compress": exp_compress,
    "commutator": exp_commutator,
    "trace-formula": exp_trace_formula,
    "shift-coeffs": exp_shift_coeffs,
    "zero-blocks": exp_zero_blocks,
    "module-map": exp_module_map,
    "asym-orth": exp_asym_orth,
    "nonnormal-demo": exp_nonnormal,
    "boundary-witness": exp_boundary,
    "spectrum-probe": exp_spectrum_probe,
}
assert set(RUNNERS) == set(EXPERIMENTS)


def run_experiment(name: str, spec, D: int, params: dict) -> Result:
    try:
        return RUNNERS[name](spec, D, params)
    except (SpecError, DegreeBudgetError) as exc:
        raise InputError(f"{name}: {exc}") from None
    except ValueError as exc:
        # precondition violations raised by the library
        raise InputError(f"{name}: {exc}") from None


def worker_count() -> int:
    raw = os.environ.get("QML_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise InputError(f"QML_THREADS={raw!r} is not an integer") from None
        if n < 1:
            raise InputError("QML_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def run(config: RunConfig, spec: IdealSpec | None, command: str, echo: dict) -> tuple[int, dict, dict[str, str]]:
    """Run the configured experiments; returns (status, report document, csv files)."""
    base = {"seed": config.seed, "tolerances": config.tolerances}
    jobs = [(e["name"], {**base, **{k: v for k, v in e.items() if k != "name"}}) for e in config.experiments]
    workers = min(worker_count(), max(1, len(jobs)))
    if workers == 1:
        results = [run_experiment(n, spec, config.D, p) for n, p in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_experiment, n, spec, config.D, p) for n, p in jobs]
            results = [f.result() for f in futures]
    reports, experiments, csvs = [], [], {}
    for k, res in enumerate(results):
        entry = {"name": res.name, "data": jsonable(res.data), "profiles": []}
        for pname, prof in res.profiles.items():
            fname = f"{k:02d}_{pname}.csv" if len(results) > 1 else f"{pname}.csv"
            csvs[fname] = profile_csv(prof)
            entry["profiles"].append(f"profiles/{fname}")
        entry["reports"] = [report_dict(r) for r in res.reports]
        reports.extend(res.reports)
        experiments.append(entry)
    failed = [r.claim for r in reports if not r.passed]
    doc = {
        "schema": SCHEMA,
        "artifact_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "config": jsonable(echo),
        "spec": spec.to_dict() if spec is not None else None,
        "experiments": experiments,
        "failed_claims": sorted(set(failed)),
        "status": "fail" if failed else "pass",
    }
    return (1 if failed else 0), doc, csvs


def write_outputs(out: str, doc: dict, csvs: dict[str, str]) -> None:
    os.makedirs(out, exist_ok=True)
    if csvs:
        os.makedirs(os.path.join(out, "profiles"), exist_ok=True)
    for name, text in sorted(csvs.items()):
        with open(os.path.join(out, "profiles", name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="ideal spec JSON file")
    common.add_argument("--degree", "-D", type=int, help=f"truncation degree D (>= 3, default {DEFAULT_D})")
    common.add_argument("--out", default="qml-out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--tol", help="tolerance overrides, claim=value,...")

    p = argparse.ArgumentParser(prog="qml", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("dims", parents=[common], help="quotient Hilbert function")
    s = sub.add_parser("compress", parents=[common], help="singular values of a compressed multiplier")
    s.add_argument("--poly", required=True, help='polynomial, e.g. "z1*z2 - w2"')
    s = sub.add_parser("commutator", parents=[common], help="[S_i*, S_j] profile and (1,inf) indicator")
    s.add_argument("--i", type=int, default=0, help="0-based coordinate")
    s.add_argument("--j", type=int, default=0)
    s = sub.add_parser("trace-formula", parents=[common], help="trace of [S_f1*, S_f2] vs closed form")
    s.add_argument("--f1", default="z1")
    s.add_argument("--f2", default="z1")
    s = sub.add_parser("shift-coeffs", parents=[common], help="shift matrix elements vs a_{m,n}(k)")
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--i", type=int, help="0-based coordinate (default: all)")
    s.add_argument("--k-max", type=int)
    s.add_argument("--sign", choices=["corrected", "literal"], default="corrected")
    s = sub.add_parser("zero-blocks", parents=[common], help="vanishing cross blocks")
    s.add_argument("--i", type=int, help="0-based coordinate (default: all)")
    s = sub.add_parser("module-map", parents=[common], help="r_g(f h) = r(f) r_g(h)")
    s.add_argument("--poly", help="fixed f (default: random per sample)")
    s.add_argument("--samples", type=int, default=50)
    s = sub.add_parser("asym-orth", parents=[common], help="inner products of powers of linear forms")
    s.add_argument("--theta-i", required=True, help="comma-separated unimodular entries")
    s.add_argument("--theta-j", required=True)
    s.add_argument("--k-max", type=int)
    s = sub.add_parser("nonnormal-demo", parents=[common], help="non-decaying commutator blocks")
    s.add_argument("--control-spec", help="spec of a control ideal")
    s = sub.add_parser("boundary-witness", parents=[common], help="compact non-zero S_f")
    s.add_argument("--poly", required=True)
    s = sub.add_parser("spectrum-probe", parents=[common], help="min eigenvalue of sum (lambda-S)(lambda-S)*")
    s.add_argument("--lam", help="comma-separated complex entries (default all ones)")
    s.add_argument("--tail-starts", type=_int_list)
    s = sub.add_parser("suite", parents=[common], help="run experiments listed in a config file")
    s.add_argument("--config", required=True, help="run configuration JSON")
    return p


_PARAM_KEYS = ("poly", "i", "j", "f1", "f2", "m", "n", "k_max", "sign", "samples",
               "theta_i", "theta_j", "control_spec", "lam", "tail_starts")


def _config_from_args(args) -> RunConfig:
    tols = parse_tolerances(args.tol)
    if args.command == "suite":
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_run_config(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc.strerror}") from None
        cfg.tolerances.update(tols)
        if args.degree is not None:
            cfg = RunConfig(args.degree, cfg.experiments, cfg.tolerances, cfg.out, cfg.seed)
        cfg.out = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        return cfg
    params = {k: getattr(args, k) for k in _PARAM_KEYS if getattr(args, k, None) is not None}
    D = DEFAULT_D if args.degree is None else args.degree
    seed = 0 if args.seed is None else args.seed
    return RunConfig(D, [{"name": args.command, **params}], tols, args.out, seed)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        spec = load_ideal_spec(args.spec) if args.spec else None
        echo = {"D": config.D, "seed": config.seed, "tolerances": config.tolerances,
                "experiments": config.experiments}
        status, doc, csvs = run(config, spec, args.command, echo)
    except (InputError, SpecError) as exc:
        print(f"qml: error: {exc}", file=sys.stderr)
        return 2
    write_outputs(config.out, doc, csvs)
    if status:
        print("qml: failed claims: " + ", ".join(doc["failed_claims"]), file=sys.stderr)
    else:
        print(f"qml: all checks passed; report in {os.path.join(config.out, 'report.json')}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
