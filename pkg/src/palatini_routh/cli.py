"""``palatini-routh`` command line interface.

Subcommands ``verify``, ``reduce``, ``reconstruct`` and ``lagrangian``.  Each
prints (or writes with ``--out``) a JSON report::

    {"tool_version", "command",
     "points": [{"coords", "residuals": [{"name", "max_abs", "frobenius", "pass"}], ...}],
     "summary"}

Exit status is 0 when every residual passes, 1 when one fails and 2 on
usage, input or domain errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import numkit as nk
from .connections import ResidualReport, SectionJet, palatini_residual, vacuum_einstein_residual
from .errors import EvaluationError, SpectrumError
from .etalinalg import SignatureMatrix
from .fixtures import FIXTURE_NAMES, NamedMetric, get_fixture, grid_points
from .framebundle import MetricJet2, VielbeinJet1, metric_jet
from .lagrangians import eh_first_order_density, palatini_density
from .reconstruction import reconstruct_point
from .reduction import reduce_F_omega

THREADS_ENV = "PALATINI_ROUTH_THREADS"


class UsageError(Exception):
    pass


# -- helpers ------------------------------------------------------------------------

def _workers(requested: int | None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map over the worker pool; results follow the input order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _params(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or []:
        k, sep, v = item.partition("=")
        try:
            if not sep:
                raise ValueError
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"bad --param {item!r}; expected name=value") from None
    return out


def _eta(spec: str | None, m: int | None = None):
    if spec is None:
        return None
    try:
        d = [float(v) for v in spec.split(",")]
        eta = SignatureMatrix(np.array(d))
    except ValueError as exc:
        raise UsageError(f"bad --eta {spec!r}: {exc}") from None
    if m is not None and eta.m != m:
        raise UsageError(f"--eta has {eta.m} entries but the data are {m}-dimensional")
    return eta


def _fixture(args) -> NamedMetric:
    try:
        return get_fixture(args.metric, _params(args.param))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid(fx: NamedMetric, spec: str | None) -> list[np.ndarray]:
    try:
        pts = grid_points(fx, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for p in pts:
        if not fx.in_domain(p, margin=-1e-12):
            raise UsageError(
                f"grid point {p.tolist()} outside the domain of {fx.name} "
                + ", ".join(f"{k} in [{lo:g}, {hi:g}]" for k, (lo, hi) in fx.domain.items())
            )
    return pts


def _contract(args) -> nk.DerivativeContract:
    if args.mode == "fd":
        return nk.DerivativeContract.fd(args.fd_step, args.richardson)
    return nk.DerivativeContract.ad()


def _point_entry(x, reports: list[ResidualReport], **extra) -> dict:
    d = {"coords": [float(v) for v in np.asarray(x).ravel()], "residuals": [r.as_dict() for r in reports]}
    d.update(extra)
    return d


def _summary(points: list[dict], tolerance, **extra) -> dict:
    worst: dict[str, float] = {}
    failures = 0
    for p in points:
        for r in p["residuals"]:
            worst[r["name"]] = max(worst.get(r["name"], 0.0), r["max_abs"])
            failures += not r["pass"]
    s = {
        "n_points": len(points),
        "tolerance": tolerance,
        "max_abs": worst,
        "failures": failures,
        "passed": failures == 0,
    }
    s.update(extra)
    return s


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _report(command: str, points: list[dict], summary: dict) -> dict:
    return {"tool_version": __version__, "command": command, "points": points, "summary": summary}


def _write_jsonl(path: str, records: list[dict]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


# -- sampled-field input ---------------------------------------------------------------

def read_jsonl(path: str) -> list[dict]:
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    records = []
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "x" not in rec:
                raise UsageError(f"{path}:{lineno}: record needs an 'x' entry")
            records.append(rec)
    if not records:
        raise UsageError(f"{path}: no records")
    return records


def _array(rec: dict, key: str, shape: tuple, where: str):
    try:
        a = np.asarray(rec[key], dtype=float)
    except (TypeError, ValueError):
        raise UsageError(f"{where}: '{key}' is not numeric") from None
    if a.shape != shape:
        raise UsageError(f"{where}: '{key}' has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise UsageError(f"{where}: '{key}' has non-finite entries")
    return a


class SampledGrid:
    """Records arranged on a Cartesian grid, for derivatives by differencing.

    Axes along which every record has the same coordinate get a zero
    derivative.
    """

    def __init__(self, xs: np.ndarray):
        self.xs = xs
        self.axes = [np.unique(xs[:, i]) for i in range(xs.shape[1])]
        shape = tuple(a.size for a in self.axes)
        if int(np.prod(shape)) != len(xs):
            raise UsageError(
                "records do not form a full Cartesian grid; supply derivatives explicitly "
                f"({len(xs)} records, axis sizes {list(shape)})"
            )
        self.shape = shape
        self.index = np.array([[np.searchsorted(a, x[i]) for i, a in enumerate(self.axes)] for x in xs])
        if len({tuple(i) for i in self.index}) != len(xs):
            raise UsageError("duplicate chart points in input")

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Derivatives of per-record arrays, appended as a trailing axis."""
        tail = values.shape[1:]
        cube = np.empty(self.shape + tail)
        cube[tuple(self.index.T)] = values
        parts = []
        for i, a in enumerate(self.axes):
            if a.size == 1:
                parts.append(np.zeros_like(cube))
            else:
                parts.append(np.gradient(cube, a, axis=i, edge_order=2 if a.size > 2 else 1))
        d = np.stack(parts, axis=-1)
        return d[tuple(self.index.T)]


def _load_frames(path: str):
    recs = read_jsonl(path)
    m = len(recs[0]["x"])
    if m < 2:
        raise UsageError(f"{path}: chart dimension must be at least 2")
    xs, es, des, edx, dde = [], [], [], [], []
    for n, r in enumerate(recs, 1):
        where = f"{path}:{n}"
        for key in ("e", "de"):
            if key not in r:
                raise UsageError(f"{where}: frame record needs '{key}'")
        xs.append(_array(r, "x", (m,), where))
        es.append(_array(r, "e", (m, m), where))
        des.append(_array(r, "de", (m, m, m), where))
        edx.append(_array(r, "e_dx", (m, m, m), where) if "e_dx" in r else None)
        dde.append(_array(r, "dde", (m, m, m, m), where) if "dde" in r else None)
    xs, es, des = np.array(xs), np.array(es), np.array(des)
    grid = None
    if any(v is None for v in edx) or any(v is None for v in dde):
        grid = SampledGrid(xs)
    if any(v is None for v in edx):
        edx = grid.gradient(es)
    if any(v is None for v in dde):
        dde = grid.gradient(des)
    return xs, es, des, np.asarray(edx), np.asarray(dde)


def _load_metrics(path: str):
    recs = read_jsonl(path)
    m = len(recs[0]["x"])
    xs, gs, dgs, ddgs = [], [], [], []
    for n, r in enumerate(recs, 1):
        where = f"{path}:{n}"
        if "g" not in r:
            raise UsageError(f"{where}: metric record needs 'g'")
        xs.append(_array(r, "x", (m,), where))
        gs.append(_array(r, "g", (m, m), where))
        dgs.append(_array(r, "dg", (m, m, m), where) if "dg" in r else None)
        ddgs.append(_array(r, "ddg", (m, m, m, m), where) if "ddg" in r else None)
    xs, gs = np.array(xs), np.array(gs)
    if any(v is None for v in dgs) or any(v is None for v in ddgs):
        grid = SampledGrid(xs)
        if any(v is None for v in dgs):
            dgs = grid.gradient(gs)
        if any(v is None for v in ddgs):
            ddgs = grid.gradient(np.asarray(dgs))
    return xs, gs, np.asarray(dgs), np.asarray(ddgs)


def _sym_metric(x, g, dg, ddg) -> MetricJet2:
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    try:
        return MetricJet2(g, dg, 0.5 * (ddg + np.swapaxes(ddg, 0, 1)), at=x)
    except ValueError as exc:
        raise UsageError(f"metric record at x={x.tolist()}: {exc}") from None


# -- subcommands ----------------------------------------------------------------------

def cmd_verify(args) -> int:
    tol = args.tol if args.tol is not None else (1e-8 if args.mode == "ad" else 1e-4)
    jobs = _workers(args.jobs)
    if args.metric:
        fx = _fixture(args)
        pts = _grid(fx, args.grid)
        contract = _contract(args)

        def one(x):
            return _point_entry(x, [vacuum_einstein_residual(metric_jet(fx.field, x, contract), tol)])

        entries = _map(one, pts, jobs)
        extra = {"input": {"metric": fx.name, "params": dict(fx.params)}, "mode": args.mode}
    else:
        recs = read_jsonl(args.input)
        if "e" in recs[0]:
            xs, es, des, edx, dde = _load_frames(args.input)
            eta = _eta(args.eta, xs.shape[1]) or SignatureMatrix.lorentzian(xs.shape[1])

            def one(i):
                s = SectionJet(nk.Jet(es[i], edx[i]), nk.Jet(des[i], dde[i]), xs[i])
                return _point_entry(xs[i], palatini_residual(s, eta, tolerance=tol))

            kind = "frame"
        else:
            xs, gs, dgs, ddgs = _load_metrics(args.input)
            metrics = [_sym_metric(xs[i], gs[i], dgs[i], ddgs[i]) for i in range(len(xs))]

            def one(i):
                return _point_entry(xs[i], [vacuum_einstein_residual(metrics[i], tol)])

            kind = "metric"
        entries = _map(one, list(range(len(xs))), jobs)
        extra = {"input": {"file": args.input, "kind": kind}}
    summary = _summary(entries, tol, **extra)
    _emit(_report("verify", entries, summary), args.out)
    return 0 if summary["passed"] else 1


def cmd_reduce(args) -> int:
    xs, es, des, _, _ = _load_frames(args.frame_input)
    m = xs.shape[1]
    eta = _eta(args.eta, m) or SignatureMatrix.lorentzian(m)
    fx = _fixture(args) if args.metric else None
    if fx is not None and fx.dim != m:
        raise UsageError(f"{fx.name} is {fx.dim}-dimensional but the frames are {m}-dimensional")
    tol = args.tol

    def one(i):
        try:
            red = reduce_F_omega(VielbeinJet1(es[i], des[i], at=xs[i]), eta)
        except ValueError as exc:
            raise UsageError(f"frame record {i + 1}: {exc}") from None
        reports = []
        if fx is not None:
            ref = metric_jet(fx.field, xs[i])
            diff = np.concatenate([(red.g - ref.g).ravel(), (red.dg - ref.dg).ravel()])
            reports.append(ResidualReport.of("fixture_jet", diff, tol))
        return _point_entry(xs[i], reports, g=red.g.tolist(), dg=red.dg.tolist())

    entries = _map(one, list(range(len(xs))), _workers(args.jobs))
    if args.records:
        _write_jsonl(args.records, [{"x": p["coords"], "g": p["g"], "dg": p["dg"]} for p in entries])
    summary = _summary(entries, tol, input={"file": args.frame_input})
    _emit(_report("reduce", entries, summary), args.out)
    return 0 if summary["passed"] else 1


def cmd_reconstruct(args) -> int:
    fx = _fixture(args)
    eta = _eta(args.eta, fx.dim) or fx.eta
    pts = grid_points(fx, args.grid) if args.margin is not None else _grid(fx, args.grid)
    excluded = []
    if args.margin is not None:
        excluded = [p for p in pts if not fx.in_domain(p, args.margin)]
        pts = [p for p in pts if fx.in_domain(p, args.margin)]
    tol = args.tol
    frame_records = []

    def one(x):
        rp = reconstruct_point(fx.field, x, eta)
        reports = rp.residuals(eta, tol) + [ResidualReport.of("round_trip", rp.round_trip_defect(eta), tol)]
        s = rp.section
        rec = {"x": x.tolist(), "e": s.frame.val.tolist(), "de": s.conn.val.tolist(),
               "e_dx": s.frame.grad.tolist(), "dde": s.conn.grad.tolist()}
        return _point_entry(x, reports, e=rec["e"], de=rec["de"], gamma=rp.connection.gamma.tolist()), rec

    results = _map(one, pts, _workers(args.jobs))
    entries = [r[0] for r in results]
    frame_records = [r[1] for r in results]
    if args.records:
        _write_jsonl(args.records, frame_records)
    summary = _summary(
        entries, tol, input={"metric": fx.name, "params": dict(fx.params)},
        excluded=[p.tolist() for p in excluded],
    )
    _emit(_report("reconstruct", entries, summary), args.out)
    return 0 if summary["passed"] else 1


def _parse_point(fx: NamedMetric, spec: str | None) -> np.ndarray:
    if not spec:
        return fx.point()
    items = [s.strip() for s in spec.split(",") if s.strip()]
    try:
        if all("=" in s for s in items):
            return fx.point(**{k.strip(): float(v) for k, _, v in (s.partition("=") for s in items)})
        vals = [float(s) for s in items]
    except ValueError as exc:
        raise UsageError(f"bad --point {spec!r}: {exc}") from None
    if len(vals) != fx.dim:
        raise UsageError(f"--point needs {fx.dim} coordinates for {fx.name}, got {len(vals)}")
    return np.array(vals)


def cmd_lagrangian(args) -> int:
    fx = _fixture(args)
    x = _parse_point(fx, args.point)
    if not fx.in_domain(x, margin=-1e-12):
        raise UsageError(f"point {x.tolist()} outside the domain of {fx.name}")
    eta = fx.eta
    rp = reconstruct_point(fx.field, x, eta)
    pal = palatini_density(rp.metric, rp.connection)
    eh = eh_first_order_density(rp.metric)
    diff = pal.density - eh.density
    report = ResidualReport.of("routhian_identity", np.array([diff]), args.tol)
    densities = {"palatini": pal.density, "eh_first_order": eh.density, "difference": diff,
                 "normalization": pal.normalization}
    entries = [_point_entry(x, [report], densities=densities)]
    summary = _summary(entries, args.tol, input={"metric": fx.name, "params": dict(fx.params)})
    _emit(_report("lagrangian", entries, summary), args.out)
    return 0 if summary["passed"] else 1


# -- parser ----------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p, metric_required: bool = False, metric_help: str = "built-in metric fixture"):
    p.add_argument("--metric", choices=FIXTURE_NAMES, required=metric_required, help=metric_help)
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="fixture parameter, repeatable")
    p.add_argument("--eta", metavar="D0,D1,..", help="signature diagonal, default Lorentzian (-1,1,..)")
    p.add_argument("--out", metavar="FILE", help="write the JSON report here instead of stdout")
    p.add_argument("--jobs", type=int, metavar="N", help=f"worker threads (capped by ${THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="palatini-routh", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="vacuum field-equation residuals on a grid or sampled file")
    _common(v)
    v.add_argument("--input", metavar="FILE", help="JSONL sampled frames or metrics")
    v.add_argument("--grid", metavar="SPEC", help="e.g. r=3..10:50,theta=0.1..3.0:20")
    v.add_argument("--mode", choices=("ad", "fd"), default="ad")
    v.add_argument("--fd-step", type=float, default=1e-5)
    v.add_argument("--richardson", action="store_true")
    v.add_argument("--tol", type=float, help="default 1e-8 (ad) or 1e-4 (fd)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("reduce", help="metric jets of sampled frame jets")
    _common(r, metric_help="compare against this fixture's metric jets")
    r.add_argument("--frame-input", required=True, metavar="FILE")
    r.add_argument("--records", metavar="FILE", help="also write (x, g, dg) JSONL records")
    r.add_argument("--tol", type=float, default=1e-10)
    r.set_defaults(func=cmd_reduce)

    c = sub.add_parser("reconstruct", help="frame section and Levi-Civita connection of a metric")
    _common(c, metric_required=True)
    c.add_argument("--grid", metavar="SPEC")
    c.add_argument("--margin", type=float, help="skip points closer than this to the fixture domain edge")
    c.add_argument("--records", metavar="FILE", help="also write frame JSONL records")
    c.add_argument("--tol", type=float, default=1e-8)
    c.set_defaults(func=cmd_reconstruct)

    lg = sub.add_parser("lagrangian", help="Palatini and first-order Einstein-Hilbert densities at a point")
    _common(lg, metric_required=True)
    lg.add_argument("--point", metavar="COORDS", help="name=value list or all coordinates, comma-separated")
    lg.add_argument("--tol", type=float, default=1e-12)
    lg.set_defaults(func=cmd_lagrangian)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify" and bool(args.metric) == bool(args.input):
            raise UsageError("verify needs exactly one of --metric or --input")
        if getattr(args, "jobs", None) is not None and args.jobs < 1:
            raise UsageError("--jobs must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"palatini-routh: error: {exc}", file=sys.stderr)
        return 2
    except (SpectrumError, EvaluationError) as exc:
        print(f"palatini-routh: domain error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
