"""Command-line entry point: ``tclust fit | simulate | bench``.

Exit codes: 0 success, 2 unreadable input or bad flags, 3 infeasible
configuration (e.g. k > n), 4 numerical failure.
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
import warnings
from pathlib import Path

import numpy as np

from .evaluate import METHODS, bench_table
from .model import ConstraintSpec, Dataset, FitConfig, FitResult, InvalidInput, Mode
from .simgen import SCHEMES, SimScheme, generate
from .solver import fit

EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

LABEL_COLUMN = "true_label"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


class ParseError(Exception):
    pass


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_points(path) -> np.ndarray:
    """Parse a numeric CSV. A first line with any non-numeric field is a header;
    a header column named ``true_label`` is dropped."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(t.strip() for t in r)]
    if not rows:
        raise ParseError("input file has no data rows")
    drop = set()
    first_line, first = rows[0]
    if not all(_is_number(t.strip()) for t in first):
        drop = {i for i, t in enumerate(first) if t.strip() == LABEL_COLUMN}
        rows = rows[1:]
        if not rows:
            raise ParseError("input file has a header but no data rows")
    width = None
    out = []
    for line, row in rows:
        vals = []
        for i, tok in enumerate(row):
            if i in drop:
                continue
            tok = tok.strip()
            try:
                v = float(tok)
            except ValueError:
                raise ParseError(f"line {line}: cannot parse {tok!r} as a number in row {','.join(row)!r}")
            if not math.isfinite(v):
                raise ParseError(f"line {line}: non-finite value {tok!r}")
            vals.append(v)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"line {line}: expected {width} columns, found {len(vals)}")
        out.append(vals)
    return np.array(out, dtype=float)


def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def result_json(res: FitResult, spec: ConstraintSpec, cfg: FitConfig) -> str:
    prm = res.params
    doc = {
        "k": prm.k,
        "p": prm.p,
        "n": int(res.assignment.labels.shape[0]),
        "mode": spec.mode.value,
        "c": _num(spec.c),
        "alpha": cfg.alpha,
        "weights": [_num(w) for w in prm.weights],
        "means": [[_num(v) for v in mu] for mu in prm.means],
        "covariances": [[[_num(v) for v in row] for row in s] for s in prm.covariances],
        "labels": [int(x) for x in res.assignment.labels],
        "counts": [int(x) for x in res.assignment.counts],
        "objective": _num(res.objective),
        "threshold": _num(res.threshold),
        "discriminants": [_num(v) for v in res.discriminants],
        "bayes_factors": [_num(v) for v in res.bayes_factors],
        "converged": bool(res.converged),
        "iterations_used": int(res.iterations_used),
        "start_index": int(res.start_index),
        "n_starts": cfg.n_starts,
        "f_iters": cfg.f_iters,
        "max_iters": cfg.max_iters,
        "seed": cfg.seed,
    }
    return json.dumps(doc, indent=1) + "\n"


def scatter_svg(points: np.ndarray, labels: np.ndarray, width: int = 640, height: int = 480) -> str:
    """2-D scatter: filled dots per cluster, hollow circles for trimmed points."""
    margin = 40
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    sx = margin + (points[:, 0] - lo[0]) / span[0] * (width - 2 * margin)
    sy = height - margin - (points[:, 1] - lo[1]) / span[1] * (height - 2 * margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" '
        'fill="none" stroke="#999"/>',
    ]
    for x, y, lab in zip(sx, sy, labels):
        if lab == 0:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="none" stroke="black" stroke-width="0.8"/>')
        else:
            color = PALETTE[(int(lab) - 1) % len(PALETTE)]
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _mode(value: str) -> Mode:
    try:
        return Mode(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must be one of {[m.value for m in Mode]}")


def cmd_fit(args) -> int:
    try:
        X = read_points(args.input)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        data = Dataset(X)
        spec = ConstraintSpec(args.mode, args.c)
        cfg = FitConfig(
            alpha=args.alpha,
            n_starts=args.starts,
            f_iters=args.f_iters,
            max_iters=args.max_iters,
            seed=args.seed,
        )
        if args.k < 1 or args.k > data.n:
            raise InvalidInput(f"cannot fit k={args.k} clusters to n={data.n} points")
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    try:
        res = fit(data, args.k, spec, cfg)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (np.linalg.LinAlgError, RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = result_json(res, spec, cfg)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.plot:
        if data.p != 2:
            print(f"warning: --plot needs 2-D data, got p={data.p}; no plot written", file=sys.stderr)
        else:
            atomic_write(args.plot, scatter_svg(data.points, res.assignment.labels))
    return 0


def cmd_simulate(args) -> int:
    try:
        scheme = SimScheme(args.model, args.p, args.weights, args.n_regular, args.n_outliers, args.seed)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    data, truth = generate(scheme)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(scheme.p)] + [LABEL_COLUMN])
    for row, lab in zip(data.points, truth):
        writer.writerow([repr(float(v)) for v in row] + [int(lab)])
    atomic_write(args.out, buf.getvalue())
    return 0


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_bench(args) -> int:
    try:
        models = [m.upper() for m in _split(args.models)]
        p_list = [int(p) for p in _split(args.p)]
        weights = [w.lower() for w in _split(args.weights)]
        methods = [m.lower() for m in _split(args.methods)]
        for m in models:
            if m not in SCHEMES:
                raise InvalidInput(f"unknown model {m!r}")
        for w in weights:
            if w not in ("equal", "unequal"):
                raise InvalidInput(f"unknown weights {w!r}")
        for m in methods:
            if m not in METHODS:
                raise InvalidInput(f"unknown method {m!r}")
    except (ValueError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    cells = bench_table(models, p_list, weights, methods, B=args.B, seed=args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["weights", "p", "model"]
    for m in methods:
        header += [f"{m}_rate", f"{m}_conf"]
    writer.writerow(header)
    for cell in cells:
        row = [cell.weights, cell.p, cell.model]
        for m in methods:
            rate, conf = cell.mean(m)
            row += [repr(rate), repr(conf)]
        writer.writerow(row)
    if args.out:
        atomic_write(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tclust", description="Robust trimmed clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    pf = sub.add_parser("fit", help="cluster a CSV of observations")
    pf.add_argument("input")
    pf.add_argument("--k", type=int, required=True)
    pf.add_argument("--alpha", type=float, default=0.1)
    pf.add_argument("--c", type=float, default=50.0)
    pf.add_argument("--mode", type=_mode, default=Mode.EIGEN)
    pf.add_argument("--starts", type=int, default=50)
    pf.add_argument("--f-iters", type=int, default=10)
    pf.add_argument("--max-iters", type=int, default=200)
    pf.add_argument("--seed", type=int, default=0)
    pf.add_argument("--out")
    pf.add_argument("--plot")
    pf.set_defaults(func=cmd_fit)

    ps = sub.add_parser("simulate", help="write a simulated benchmark sample")
    ps.add_argument("--model", default="M1")
    ps.add_argument("--p", type=int, default=2)
    ps.add_argument("--weights", default="equal")
    ps.add_argument("--n-regular", type=int, default=1800)
    ps.add_argument("--n-outliers", type=int, default=200)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_simulate)

    pb = sub.add_parser("bench", help="misclassification table over simulated samples")
    pb.add_argument("--B", type=int, default=25)
    pb.add_argument("--models", default="M1,M2,M3,M4,M5")
    pb.add_argument("--p", default="2")
    pb.add_argument("--weights", default="equal,unequal")
    pb.add_argument("--methods", default=",".join(METHODS))
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out")
    pb.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
