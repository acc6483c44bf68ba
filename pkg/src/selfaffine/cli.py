"""Command-line front end: ``selfaffine <subcommand> [flags]``.

Every subcommand emits a JSON run report (stdout, or ``--output`` when the
format is json).  Bulk artifacts (CSV, PGM) go to ``--output`` and are
listed in the report with their SHA-256.

Exit codes: 0 success, 1 invalid input, 2 an Unknown/Undetermined/Inconclusive
verdict under ``--strict``, 3 a computation that could not finish
(precision, budget or norm-certificate limits).
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import (
    Address,
    chaos_game,
    cylinder_cloud,
    interior_certificate,
    minkowski_decomposition_check,
    pgm_bytes,
    points_csv,
    project_address,
    render_image,
    search_interior_certificate,
)
from .classifier import (
    Connectivity,
    Interior,
    classify_uniqueness,
    connectivity_verdict,
    interior_verdict,
)
from .constants import golden_ratio, komornik_loreti
from .errors import (
    BudgetError,
    ConfigError,
    NormCertificateError,
    PrecisionExhausted,
    SelfAffineError,
)
from .spectral import (
    SpectralSpec,
    eigenstructure,
    krylov_cyclic_check,
    parse_spec,
)
from .uniqueness import (
    DEFAULT_DEPTH_CAP,
    DEFAULT_NODE_BUDGET,
    Status,
    certify_address,
    entropy_estimate,
    enumerate_unique_periodic,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_STRICT, EXIT_COMPUTE = 0, 1, 2, 3


class _Strict(Exception):
    pass


def atomic_write(path, data):
    """Write bytes via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------- input handling

def _load(args):
    """Return (model, echo text) from --config or --lambda."""
    if args.config and args.lam:
        raise ConfigError("give either --config or --lambda, not both", key="config")
    if args.lam is not None:
        text = f"row {args.lam}\nu 1\n"
    elif args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", key="config") from None
    else:
        raise ConfigError("no input: pass --config PATH or --lambda VALUE", key="config")
    force = True if args.exact else (False if args.float else None)
    if args.lam is not None and force is None:
        force = True
    return parse_spec(text, force_exact=force), text


def _as_system(model, args):
    sys_ = model.to_system() if isinstance(model, SpectralSpec) else model
    if args.float:
        sys_ = sys_.as_float()
    return sys_


def _as_spec(model, args):
    if isinstance(model, SpectralSpec):
        return model
    if not krylov_cyclic_check(model):
        raise ConfigError("u is not a cyclic vector for M", key="u")
    return eigenstructure(model, args.angle_cap, args.tolerance)


def _frac_text(x):
    return str(x) if isinstance(x, Fraction) else repr(float(x))


def _constants_block(precision=Fraction(1, 10**12)):
    g = golden_ratio(precision)
    kl = komornik_loreti(precision)
    return {
        "G": {"lo": str(g.lo), "hi": str(g.hi), "decimal": str(g)},
        "beta_star": {"lo": str(kl.lo), "hi": str(kl.hi), "decimal": str(kl)},
    }


# ---------------------------------------------------------------- subcommands

def cmd_classify(args, report):
    model, _ = _load(args)
    spec = _as_spec(model, args)
    uc = classify_uniqueness(spec)
    iv = interior_verdict(model)
    cv = connectivity_verdict(model)
    report["verdicts"] = {"uniqueness": uc.to_dict(), "interior": iv.to_dict(),
                          "connectivity": cv.value}
    report["spectrum"] = [str(b) for b in spec.blocks]
    report["mode"] = "Exact" if spec.exact else "Heuristic"
    if args.strict and (iv.verdict is Interior.UNKNOWN or cv is Connectivity.UNKNOWN):
        raise _Strict


def cmd_interior(args, report):
    model, _ = _load(args)
    iv = interior_verdict(model)
    report["verdicts"] = {"interior": iv.to_dict()}
    unknown = iv.verdict is Interior.UNKNOWN
    if args.certify:
        sys_ = _as_system(model, args).as_float()
        if args.radius is not None:
            x0 = _vector(args.x0, sys_.d)
            h = args.h if args.h is not None else args.radius / 4
            cert = interior_certificate(sys_, x0, args.radius, args.depth or 8, h)
        else:
            cert = search_interior_certificate(sys_, _vector(args.x0, sys_.d),
                                               max_depth=args.depth or 24)
        report["verdicts"]["certificate"] = cert.to_dict()
        unknown = unknown and not cert.certified
    if args.strict and unknown:
        raise _Strict


def cmd_connectivity(args, report):
    model, _ = _load(args)
    cv = connectivity_verdict(model)
    report["verdicts"] = {"connectivity": cv.value,
                          "det_abs": _frac_text(interior_verdict(model).det_abs)}
    if args.strict and cv is Connectivity.UNKNOWN:
        raise _Strict


def _vector(text, d):
    if text is None:
        return None
    vals = [float(Fraction(t)) for t in text.replace(",", " ").split()]
    if len(vals) != d:
        raise ConfigError(f"expected {d} coordinates", key="x0")
    return vals


def _read_points(path):
    try:
        rows = [line.split(",") for line in Path(path).read_text().splitlines() if line.strip()]
        return np.array([[float(x) for x in r] for r in rows])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read points: {exc}", key="points") from None


def cmd_render(args, report):
    if args.points:
        pts = _read_points(args.points)
        source = {"points": args.points}
    else:
        model, _ = _load(args)
        sys_ = _as_system(model, args)
        if args.depth is not None:
            pts = cylinder_cloud(sys_, args.depth).as_array()
            source = {"cylinder_depth": args.depth}
        else:
            pts = chaos_game(sys_, args.count, args.seed)
            source = {"chaos_game": args.count, "seed": args.seed}
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigError("render needs 2D points", key="points")
    if args.viewport:
        viewport = [float(x) for x in args.viewport.split(",")]
        if len(viewport) != 4:
            raise ConfigError("viewport is xmin,xmax,ymin,ymax", key="viewport")
    else:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = np.where(hi > lo, 0.0, 1.0)
        viewport = [lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1]]
    w, h = (int(x) for x in args.resolution.lower().split("x"))
    raster = render_image(pts, viewport, (w, h))
    report["results"] = {"source": source, "viewport": viewport, "resolution": [w, h],
                         "lit_pixels": int((raster > 0).sum()), "points": int(len(pts))}
    if args.format == "csv":
        _artifact(args, report, points_csv(pts).encode())
    else:
        _artifact(args, report, pgm_bytes(raster, binary=not args.counts), kind="pgm")


def _artifact(args, report, data, kind=None):
    if not args.output:
        raise ConfigError(f"--output is required for {kind or args.format} output", key="output")
    atomic_write(args.output, data)
    report["artifacts"].append({"path": str(args.output), "format": kind or args.format,
                                "sha256": _sha256(data), "bytes": len(data)})


def _parse_lengths(text, default_hi):
    if text is None:
        return list(range(1, default_hi + 1))
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(text)]


def _enumerate(args, report, lengths):
    sys_ = _as_system(_load(args)[0], args)
    rows = []
    undetermined = 0
    for n in lengths:
        e = enumerate_unique_periodic(sys_, n, args.depth_cap, args.node_budget)
        rows.append((n, e.count, e.undetermined, e.collisions))
        undetermined += e.undetermined
    report["results"] = {"depth_cap": args.depth_cap, "node_budget": args.node_budget,
                         "counts": [{"n": n, "N_n": c, "undetermined": u, "collisions": k}
                                    for n, c, u, k in rows]}
    positive = {n: c for n, c, _, _ in rows if c > 0}
    if len(positive) >= 4 and sorted(positive) == list(range(min(positive), max(positive) + 1)):
        report["results"]["entropy"] = entropy_estimate(positive).to_dict()
    report["mode"] = "Exact" if sys_.exact else "Float"
    if args.format == "csv":
        csv = "n,N_n\n" + "".join(f"{n},{c}\n" for n, c, _, _ in rows)
        _artifact(args, report, csv.encode())
    return undetermined


def cmd_unique(args, report):
    if args.address is None and args.length is None:
        raise ConfigError("unique needs --address or --length", key="address")
    if args.address is not None:
        model, _ = _load(args)
        sys_ = _as_system(model, args)
        try:
            a = Address.parse(args.address)
        except ValueError as exc:
            raise ConfigError(str(exc), key="address") from None
        if not a.is_periodic:
            raise ConfigError("per-address certification requires eventually periodic input",
                              key="address")
        cert = certify_address(sys_, a, args.depth_cap, args.node_budget)
        report["verdicts"] = {"certification": cert.to_dict()}
        report["mode"] = "Exact" if sys_.exact else "Float"
        if args.strict and cert.status is Status.UNDETERMINED:
            raise _Strict
        return
    undetermined = _enumerate(args, report, list(range(1, args.length + 1)))
    if args.strict and undetermined:
        raise _Strict


def cmd_enumerate(args, report):
    undetermined = _enumerate(args, report, _parse_lengths(args.lengths, 8))
    if args.strict and undetermined:
        raise _Strict


def cmd_constants(args, report):
    prec = Fraction(args.precision) if args.precision else Fraction(1, 10**12)
    g = golden_ratio(prec)
    kl = komornik_loreti(prec)
    report["results"] = {
        "precision": str(prec),
        "G": {"lo": str(g.lo), "hi": str(g.hi), "width": float(g.width), "decimal": str(g),
              "definition": "(1 + sqrt 5)/2, root of x^2 = x + 1"},
        "beta_star": {"lo": str(kl.lo), "hi": str(kl.hi), "width": float(kl.width),
                      "decimal": str(kl),
                      "definition": "unique x > 1 with sum_{n>=1} m_n x^(1-n) = 1, "
                                    "m = Thue-Morse 0110 1001 ..."},
    }


def cmd_decompose(args, report):
    sys_ = _as_system(_load(args)[0], args)
    rep = minkowski_decomposition_check(sys_, args.blocks, args.depth)
    report["verdicts"] = {"decomposition": rep.to_dict()}
    report["mode"] = "Exact" if sys_.exact else "Float"
    if not rep.equal and args.strict:
        raise _Strict


def cmd_project(args, report):
    sys_ = _as_system(_load(args)[0], args)
    if args.address is None:
        raise ConfigError("project needs --address", key="address")
    try:
        a = Address.parse(args.address)
    except ValueError as exc:
        raise ConfigError(str(exc), key="address") from None
    n = args.depth if args.depth is not None else 32
    point, radius = project_address(sys_, a, n)
    report["results"] = {"address": str(a), "depth": a.known_length(n),
                         "point": [_frac_text(x) for x in point],
                         "point_decimal": [float(x) for x in point],
                         "radius": _frac_text(radius), "norm": "max"}
    report["mode"] = "Exact" if sys_.exact else "Float"


COMMANDS = {
    "classify": cmd_classify,
    "interior": cmd_interior,
    "connectivity": cmd_connectivity,
    "render": cmd_render,
    "unique": cmd_unique,
    "enumerate": cmd_enumerate,
    "constants": cmd_constants,
    "decompose-check": cmd_decompose,
    "project": cmd_project,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration document (block lines or a matrix)")
    common.add_argument("--lambda", dest="lam", help="shortcut for the 1D system M=(lambda), u=1")
    common.add_argument("--output", help="report path (json) or artifact path (csv/pgm)")
    common.add_argument("--format", choices=("json", "csv", "pgm"),
                        help="json for reports (default); render defaults to pgm")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--depth", type=int)
    common.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
    common.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    common.add_argument("--precision")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="read decimals as exact rationals")
    mode.add_argument("--float", action="store_true", help="use floating point arithmetic")
    common.add_argument("--strict", action="store_true",
                        help="exit 2 on Unknown/Undetermined/Inconclusive verdicts")
    common.add_argument("--angle-cap", type=int, default=64)
    common.add_argument("--tolerance", type=float, default=1e-9)

    parser = argparse.ArgumentParser(prog="selfaffine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "interior":
            p.add_argument("--certify", action="store_true", help="search for a certified ball")
            p.add_argument("--x0")
            p.add_argument("--radius", type=float)
            p.add_argument("--h", type=float)
        if name == "render":
            p.add_argument("--points", help="CSV of 2D points to render instead of a system")
            p.add_argument("--count", type=int, default=100000)
            p.add_argument("--viewport", help="xmin,xmax,ymin,ymax")
            p.add_argument("--resolution", default="512x512")
            p.add_argument("--counts", action="store_true", help="hit counts instead of binary")
        if name in ("unique", "project"):
            p.add_argument("--address", help="e.g. '+-(+--)'; parentheses mark the period")
        if name == "unique":
            p.add_argument("--length", type=int, help="enumerate periodic words up to this length")
        if name == "enumerate":
            p.add_argument("--lengths", help="n or a:b (default 1:8)")
        if name == "decompose-check":
            p.add_argument("--blocks", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "pgm" if args.command == "render" else "json"
    threads = os.environ.get("SELFAFFINE_THREADS")
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "argv": list(argv if argv is not None else sys.argv[1:]),
        "input": None,
        "mode": "Exact",
        "verdicts": {},
        "results": {},
        "constants": _constants_block(),
        "artifacts": [],
        "threads": int(threads) if threads and threads.isdigit() else 1,
    }
    if args.config:
        try:
            report["input"] = Path(args.config).read_text()
        except OSError:
            pass
    elif args.lam is not None:
        report["input"] = f"row {args.lam}\nu 1\n"
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        COMMANDS[args.command](args, report)
    except _Strict:
        code = EXIT_STRICT
    except (PrecisionExhausted, BudgetError, NormCertificateError) as exc:
        report["error"] = str(exc)
        code = EXIT_COMPUTE
    except (ConfigError, SelfAffineError, ValueError) as exc:
        print(f"selfaffine: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report["timing_seconds"] = round(time.perf_counter() - t0, 6)
    text = json.dumps(report, indent=2) + "\n"
    if args.format == "json" and args.output:
        atomic_write(args.output, text.encode())
    else:
        sys.stdout.write(text)
    if code == EXIT_COMPUTE:
        print(f"selfaffine: error: {report['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
