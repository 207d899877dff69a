"""Command-line front end.

Subcommands: design, eval, resample, zoneplate, compare, tables.  Tables and
CSV files begin with ``#`` comment lines recording every setting used.
Exit codes: 0 ok, 1 usage, 2 numeric failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import metrics, pnm
from .kernelspace import (KernelSpec, OverconstrainedError, free_variable_count, kernel_to_json,
                          parse_spec)
from .optimizer import DEFAULT_RANDOM_STARTS, DEFAULT_SEED, optimize_kernel
from .polyalg import rational
from .resample import BOUNDARIES, ResamplePlan, resample_2d
from .staircase import QuadratureConfig, eg_numeric, eg_squared, eg_squared_avg, ed
from .zoo import BENCHMARK_KERNELS, reference_kernel, wrap

log = logging.getLogger("kernelforge")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

GRID_RADII = ["1", "3/2", "2", "5/2", "3"]
GRID_DEGREES = [2, 3, 4]
LISTED_KERNELS = ["K_2_2", "K_2_4_S", "K_5_2_3", "K_3_3", "K_3_3_S", "K_3_4_S"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def threads() -> int:
    try:
        return max(1, int(os.environ.get("KERNELFORGE_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# helpers


def _kernel(selector: str):
    try:
        return reference_kernel(selector)
    except (KeyError, ValueError, IndexError) as exc:
        raise UsageError(f"unknown kernel {selector!r}") from exc


def eg_of(kernel, theta=Fraction(1, 2), quad: QuadratureConfig = QuadratureConfig()) -> tuple[float, bool]:
    """E_g(theta) and whether it came from the exact path."""
    pk = getattr(kernel, "piecewise", None)
    if pk is not None and not pk.is_symbolic:
        return math.sqrt(eg_squared(pk, theta).value()), True
    dk = getattr(kernel, "derivative", None)
    return eg_numeric(kernel, float(kernel.radius), float(theta), quad, dk, float(kernel.delta)), False


def _header(settings: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in settings.items())


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(rows, header: list[str], settings: dict) -> str:
    buf = io.StringIO()
    buf.write(_header(settings))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_design(args) -> int:
    spec = KernelSpec(rational(args.r), args.p, args.smooth)
    res = optimize_kernel(spec, args.metric, starts=args.starts, seed=args.seed)
    doc = kernel_to_json(res.kernel)
    doc["coefficients_6"] = [[f"{float(c):.6f}" for c in row[1:]]
                             for row in res.kernel.rational_coeffs()]
    _emit(_json_text(doc), args.out)
    if args.report:
        report = res.report()
        report["e_g_half"] = eg_of(wrap(res.kernel))[0]
        Path(args.report).write_text(_json_text(report))
    return EXIT_OK


def cmd_eval(args) -> int:
    k = _kernel(args.kernel)
    theta = rational(args.theta)
    quad = QuadratureConfig(order=args.quad_order)
    pk = getattr(k, "piecewise", None)
    if args.metric == "eg":
        value, exact = eg_of(k, theta, quad)
    elif args.metric == "eg-avg":
        if pk is None:
            raise UsageError("eg-avg needs a piecewise-polynomial kernel")
        value, exact = math.sqrt(eg_squared_avg(pk).value()), True
    elif args.metric == "ed":
        if pk is None:
            raise UsageError("ed needs a piecewise-polynomial kernel")
        value, exact = math.sqrt(ed(pk, theta).value()), True
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(args.metric)
    doc = {"kernel": args.kernel, "metric": args.metric, "theta": str(theta),
           "value": value, "exact": exact, "quad_order": args.quad_order}
    _emit(_json_text(doc), args.out)
    return EXIT_OK


def cmd_resample(args) -> int:
    k = _kernel(args.kernel)
    img = pnm.read_image(args.input)
    scale = rational(args.scale)
    h, w = img.shape
    if args.size:
        ow, oh = (int(v) for v in args.size.lower().split("x"))
    else:
        ow, oh = int(w * scale), int(h * scale)
    # pixel centres aligned: x_src = (x_out + 1/2) / scale - 1/2
    phase = Fraction(1, 2) / scale - Fraction(1, 2) if args.align == "center" else Fraction(0)
    px = ResamplePlan(k, scale, phase, args.boundary, size=ow)
    py = ResamplePlan(k, scale, phase, args.boundary, size=oh)
    out = resample_2d(img, px, py)
    bits = args.bits or _input_bits(args.input)
    pnm.write_image(args.output, out, bits)
    return EXIT_OK


def _input_bits(path) -> int:
    try:
        _, maxval = pnm.read_pgm_raw(path)
        return 16 if maxval > 255 else 8
    except pnm.PNMError:
        return 8


def _zone_rows(selectors, labels, boundary, endpoints):
    def one(sel):
        k = _kernel(sel)
        res = metrics.zone_plate_experiment(k, boundary, endpoints=endpoints)
        eg, _ = eg_of(k)
        return k, res, eg

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(one, selectors))
    rows = []
    for label, (k, res, eg) in zip(labels, results):
        rows.append([label, f"{eg:.3f}", f"{res['rmse']:.3e}", f"{res['rmse_interior']:.3e}",
                     f"{res['gcs']:.6f}"])
    return rows, results


def _zone_settings(args) -> dict:
    return {"F": metrics.ZONE_F, "source_dx": str(metrics.SOURCE_DX),
            "target_dx": str(metrics.TARGET_DX), "endpoints": args.endpoints,
            "boundary": args.boundary, "eg_theta": "1/2",
            "quad_order": QuadratureConfig().order,
            "interior_crop": "ceil(r)*scale", "gcs": "scharr, replicate border"}


CSV_COLUMNS = ["kernel", "E_g", "RMSE", "RMSE_interior", "GCS"]


def cmd_zoneplate(args) -> int:
    sels = args.kernel or ["linear"]
    rows, results = _zone_rows(sels, sels, args.boundary, args.endpoints)
    _emit(_csv_text(rows, CSV_COLUMNS, _zone_settings(args)), args.csv)
    if args.dump_dir:
        d = Path(args.dump_dir)
        d.mkdir(parents=True, exist_ok=True)
        for sel, (_, res, _) in zip(sels, results):
            pnm.write_pgm(d / f"zoneplate_{_slug(sel)}.pgm", res["image"], 16)
    return EXIT_OK


def _slug(s: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in s).strip("_")


def cmd_compare(args) -> int:
    from . import plotting

    labels = args.kernel or list(BENCHMARK_KERNELS)
    sels = [BENCHMARK_KERNELS.get(lab, lab) for lab in labels]
    rows, results = _zone_rows(sels, labels, args.boundary, args.endpoints)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compare.csv").write_text(_csv_text(rows, CSV_COLUMNS, _zone_settings(args)))
    truth = results[0][1]["truth"]
    pnm.write_pgm(out / "zoneplate_truth.pgm", truth, 16)
    for label, (k, res, _) in zip(labels, results):
        slug = _slug(label)
        pnm.write_pgm(out / f"zoneplate_{slug}.pgm", res["image"], 16)
        mag = metrics.gradient_magnitude(res["image"])
        pnm.write_pgm(out / f"gradmag_{slug}.pgm", mag / max(float(mag.max()), 1e-300), 16)
        if not args.no_figures:
            plotting.plot_image(np.clip(res["image"], 0, 1), out / f"zoneplate_{slug}.png", label)
            _, segs = plotting.plot_gradient_field(res["image"], out / f"gradmag_{slug}.png",
                                                   title=label)
        else:
            segs = plotting.isoline_segments(mag, _levels(mag))
        plotting.write_isolines_csv(segs, out / f"isolines_{slug}.csv")
    if not args.no_figures:
        plotting.plot_kernels({lab: k for lab, (k, _, _) in zip(labels, results)},
                              out / "kernels.png")
    sys.stdout.write(_csv_text(rows, CSV_COLUMNS, _zone_settings(args)))
    return EXIT_OK


def _levels(mag):
    top = float(mag.max())
    return [top * f for f in (0.25, 0.5, 0.75)] if top > 0 else []


def free_var_rows() -> list[list[str]]:
    rows = []
    for r in GRID_RADII:
        row = [r]
        for smooth in (False, True):
            for p in GRID_DEGREES:
                n = free_variable_count(KernelSpec(rational(r), p, smooth))
                row.append("-" if n is None else str(n))
        rows.append(row)
    return rows


def cmd_tables(args) -> int:
    if args.which == "free-vars":
        header = ["r"] + [f"p={p}" for p in GRID_DEGREES] + [f"p={p},S" for p in GRID_DEGREES]
        settings = {"table": "free-variable count", "dash": "over-constrained"}
        _emit(_csv_text(free_var_rows(), header, settings), args.out)
    elif args.which == "eg-rmse":
        ns = argparse.Namespace(endpoints=True, boundary="analytic")
        labels = list(BENCHMARK_KERNELS)
        rows, _ = _zone_rows([BENCHMARK_KERNELS[lab] for lab in labels], labels, "analytic", True)
        _emit(_csv_text(rows, CSV_COLUMNS, _zone_settings(ns)), args.out)
    elif args.which == "coefficients":
        settings = {"metric": "eg_half", "starts": DEFAULT_RANDOM_STARTS, "seed": DEFAULT_SEED,
                    "box": "[-4, 4]", "format": "6 decimals"}
        rows = []
        for label in LISTED_KERNELS:
            res = optimize_kernel(parse_spec(label))
            for i, row in enumerate(res.kernel.rational_coeffs()):
                rows.append([label, i] + [f"{float(c):.6f}" for c in row[1:]])
        header = ["kernel", "piece"] + [f"c{j}" for j in range(1, 5)]
        _emit(_csv_text(rows, header, settings), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kernelforge", description="Interpolation kernel design and evaluation.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="optimize a kernel family")
    p.add_argument("--r", required=True, help="support radius, e.g. 2 or 5/2")
    p.add_argument("--p", type=int, required=True, help="polynomial degree")
    p.add_argument("--smooth", action="store_true", help="require C1 continuity")
    p.add_argument("--metric", choices=["eg-half", "eg-avg"], default="eg-half")
    p.add_argument("--starts", type=int, default=DEFAULT_RANDOM_STARTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="kernel JSON path (default stdout)")
    p.add_argument("--report", help="optimization report JSON path")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("eval", help="staircasing measure of one kernel")
    p.add_argument("--kernel", required=True)
    p.add_argument("--metric", choices=["eg", "eg-avg", "ed"], default="eg")
    p.add_argument("--theta", default="1/2")
    p.add_argument("--quad-order", type=int, default=QuadratureConfig().order)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("resample", help="resample a grayscale image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--kernel", default="K_2_2")
    p.add_argument("--scale", required=True, help="output/input ratio, e.g. 8 or 3/2")
    p.add_argument("--boundary", choices=BOUNDARIES, default="replicate")
    p.add_argument("--size", help="output WxH (default input size times scale)")
    p.add_argument("--align", choices=["corner", "center"], default="corner",
                   help="corner: x_src = n / scale (default); center: pixel centres aligned")
    p.add_argument("--bits", type=int, choices=[8, 16])
    p.set_defaults(func=cmd_resample)

    for name, fn, helptext in (("zoneplate", cmd_zoneplate, "zone-plate experiment"),
                               ("compare", cmd_compare, "zone-plate comparison with figures")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--kernel", action="append", help="kernel selector (repeatable)")
        p.add_argument("--boundary", choices=("analytic",) + BOUNDARIES, default="analytic")
        p.add_argument("--no-endpoints", dest="endpoints", action="store_false",
                       help="30x30 source grid instead of 31x31")
        if name == "zoneplate":
            p.add_argument("--csv")
            p.add_argument("--dump-dir")
        else:
            p.add_argument("--out-dir", required=True)
            p.add_argument("--no-figures", action="store_true")
        p.set_defaults(func=fn)

    p = sub.add_parser("tables", help="regenerate the summary tables")
    p.add_argument("--which", choices=["free-vars", "eg-rmse", "coefficients"], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tables)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kernelforge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, pnm.PNMError) as exc:
        print(f"kernelforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, RuntimeError, OverconstrainedError, ArithmeticError) as exc:
        print(f"kernelforge: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"kernelforge: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
