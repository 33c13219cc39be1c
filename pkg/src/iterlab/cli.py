"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 a check was
inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analytics, densities, identities, pdecheck
from .errors import DomainError, IterlabError, SingularPoint
from .models import parse_model
from .numerics import Grid1D
from .sampling import RngState, sample_marginal, worker_count

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# -- file helpers ------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonl(objs) -> str:
    return "".join(json.dumps(o, sort_keys=True) + "\n" for o in objs)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _strip_runtime(obj):
    if isinstance(obj, dict):
        return {k: _strip_runtime(v) for k, v in obj.items() if k != "runtime_ms"}
    if isinstance(obj, list):
        return [_strip_runtime(v) for v in obj]
    return obj


def result_digest(objs) -> str:
    """SHA-256 over the reported numbers (wall-clock fields excluded)."""
    blob = json.dumps(_strip_runtime(list(objs)), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(out: Path | None, argv, objs, seeds, verdicts) -> dict:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": argv[0] if argv else "",
        "argv": list(argv),
        "seeds": seeds,
        "tool_version": tool_version(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "verdicts": verdicts,
        "result_digest": result_digest(objs),
    }
    if out is not None:
        _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def _exit_for(verdicts) -> int:
    if any(v == "fail" for v in verdicts):
        return EXIT_FAIL
    if any(v == "inconclusive" for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# -- argument parsing helpers -----------------------------------------------------

def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _x_values(text: str) -> np.ndarray:
    """``lo:hi:step`` or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("x range must be lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if not step > 0 or hi < lo:
            raise UsageError("x range needs step > 0 and hi >= lo")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return np.round(lo + step * np.arange(n), 12)
    return np.asarray(_floats(text))


def _grid(text: str | None) -> Grid1D | None:
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("grid must be lo:hi:n")
    try:
        return Grid1D.uniform(float(parts[0]), float(parts[1]), int(parts[2]))
    except (ValueError, DomainError) as exc:
        raise UsageError(f"bad grid {text!r}: {exc}")


# -- commands ------------------------------------------------------------------------

def cmd_verify_pde(args, argv) -> int:
    valid = [e.tag for e in pdecheck.equation_registry()]
    if args.all:
        tags = valid
    elif args.tags:
        tags = [t.strip() for t in args.tags.split(",") if t.strip()]
        bad = [t for t in tags if t not in valid]
        if bad:
            raise UsageError(f"unknown equation tags {bad}; choose from {valid}")
    else:
        raise UsageError("give --tags or --all")
    grid = _grid(args.grid)

    def run(tag):
        return pdecheck.strong_residual(pdecheck.registry_entry(tag), grid=grid,
                                        tolerance=args.tol)

    workers = min(worker_count(), len(tags))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, tags))  # registry order preserved
    else:
        reports = [run(t) for t in tags]
    objs = [{"schema_version": SCHEMA_VERSION, "seeds": [], **r.to_dict()} for r in reports]
    verdicts = {r.tag: r.verdict for r in reports}
    out = Path(args.out) if args.out else None
    if out is not None:
        _atomic_write(out / "pde_reports.jsonl", _jsonl(objs))
        rows = [(r.tag, p["x"], p["t"], repr(float(p["rel_residual"])), repr(float(p["budget"])))
                for r in reports for p in r.points]
        _atomic_write(out / "pde_points.csv",
                      _csv(["tag", "x", "t", "rel_residual", "error_budget"], rows))
    _write_manifest(out, argv, objs, [], verdicts)
    for r in reports:
        print(f"({r.tag}) {r.verdict:12s} max_rel_residual={r.max_rel_residual:.3e} "
              f"tol={r.tolerance:.0e} points={r.n_points}")
    return _exit_for(verdicts.values())


def cmd_verify_identities(args, argv) -> int:
    if args.samples < identities.MIN_SAMPLES:
        print(f"warning: --samples {args.samples} is below the minimum "
              f"{identities.MIN_SAMPLES}", file=sys.stderr)
        return EXIT_USAGE
    cases = identities.default_cases(seed=args.seed, n_samples=args.samples,
                                     negative_controls=args.negative_controls)
    if not args.all:
        if not args.tags:
            raise UsageError("give --tags or --all")
        wanted = [t.strip() for t in args.tags.split(",") if t.strip()]
        bad = [t for t in wanted if t not in identities.IDENTITY_TAGS]
        if bad:
            raise UsageError(f"unknown identity tags {bad}")
        cases = [c for c in cases if c.tag in wanted]
    reports = [identities.run_identity(c) for c in cases]
    objs = [{"schema_version": SCHEMA_VERSION, **r.to_dict()} for r in reports]
    verdicts = [r.verdict for r in reports]
    out = Path(args.out) if args.out else None
    if out is not None:
        _atomic_write(out / "identity_reports.jsonl", _jsonl(objs))
    _write_manifest(out, argv, objs, [r.seeds for r in reports],
                    [{"tag": r.tag, "verdict": r.verdict} for r in reports])
    for r in reports:
        print(f"{r.tag:16s} {r.verdict:5s} D={r.ks.statistic:.5f} p={r.ks.approx_p_value:.4f}")
    if args.negative_controls:
        # power checks succeed when every control is rejected
        return EXIT_OK if all(v == "fail" for v in verdicts) else EXIT_FAIL
    return _exit_for(verdicts)


def cmd_density(args, argv) -> int:
    model = parse_model(args.model)
    xs = _x_values(args.x)
    rows = []
    for t in _floats(args.t):
        for x in xs:
            try:
                d = densities.density_with_error(model, float(x), t)
                rows.append((repr(float(x)), repr(t), repr(float(d.value)), repr(float(d.error)), ""))
            except SingularPoint:
                rows.append((repr(float(x)), repr(t), "", "", "singular"))
    text = _csv(["x", "t", "density", "err_estimate", "singular"], rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_sample(args, argv) -> int:
    model = parse_model(args.model)
    if args.n < 1:
        raise UsageError("--n must be positive")
    values = sample_marginal(model, args.t, RngState(args.seed, args.stream), args.n)
    text = _csv(["value"], [(repr(float(v)),) for v in values])
    _emit(text, args.out)
    return EXIT_OK


def cmd_moments(args, argv) -> int:
    hursts = tuple(_floats(args.chain))
    ks = _ints(args.k)
    if len(hursts) < 2:
        raise UsageError("--chain needs at least two Hurst values")
    from .models import IteratedFBmChain
    model = IteratedFBmChain(*hursts)
    x = sample_marginal(model, args.t, RngState(args.seed, 0), args.samples) \
        if args.samples else None
    rows = []
    verdicts = []
    for k in ks:
        spec = analytics.MomentSpec(k, hursts)
        logv = analytics.log_moment_iterated(spec, args.t)
        try:
            closed = analytics.moment_iterated(spec, args.t)
        except OverflowError:
            closed = math.inf
        # Monte Carlo standard errors are meaningless for very high orders
        if x is not None and 2 * k <= 20:
            p = x ** (2 * k)
            est, se = float(np.mean(p)), float(np.std(p, ddof=1) / math.sqrt(p.size))
            verdict = "pass" if abs(est - closed) <= 4 * se else "fail"
        else:
            est, se, verdict = math.nan, math.nan, "skipped"
        verdicts.append(verdict)
        rows.append((k, 2 * k, repr(closed), repr(logv), repr(est), repr(se), verdict))
    text = _csv(["k", "order", "closed_form", "log_closed_form", "mc_estimate", "std_error",
                 "verdict"], rows)
    _emit(text, args.out)
    return _exit_for(v for v in verdicts if v != "skipped")


def cmd_rerun(args, argv) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}")
    old_argv = [a for a in manifest["argv"]]
    # drop any output directory so the rerun does not overwrite the original
    cleaned = []
    skip = False
    for a in old_argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        cleaned.append(a)
    captured = {}
    code = main(cleaned, _capture=captured)
    digest = captured.get("manifest", {}).get("result_digest")
    same = digest == manifest["result_digest"]
    print(f"rerun {'reproduced' if same else 'DIFFERS FROM'} manifest digest "
          f"{manifest['result_digest'][:16]}")
    return code if same else EXIT_FAIL


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(Path(out), text)
    else:
        sys.stdout.write(text)


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="iterlab", description="Checks for iterated fBm and Cauchy compositions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify-pde", help="residuals of the governing equations")
    v.add_argument("--tags", help="comma-separated entries a..o")
    v.add_argument("--all", action="store_true")
    v.add_argument("--tol", type=float, help="override every tolerance")
    v.add_argument("--grid", help="x grid lo:hi:n used at every time")
    v.add_argument("--out", help="directory for reports and the manifest")

    i = sub.add_parser("verify-identities", help="KS tests of the distributional identities")
    i.add_argument("--tags")
    i.add_argument("--all", action="store_true")
    i.add_argument("--samples", type=int, default=100_000)
    i.add_argument("--seed", type=int, default=identities.DEFAULT_SEED)
    i.add_argument("--negative-controls", action="store_true")
    i.add_argument("--out")

    d = sub.add_parser("density", help="tabulate a density")
    d.add_argument("--model", required=True)
    d.add_argument("--t", required=True, help="comma-separated times")
    d.add_argument("--x", default="-3:3:0.1", help="lo:hi:step or a list")
    d.add_argument("--out")

    s = sub.add_parser("sample", help="draw fixed-time marginals")
    s.add_argument("--model", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out")

    m = sub.add_parser("moments", help="closed-form even moments vs Monte Carlo")
    m.add_argument("--chain", required=True, help="Hurst values, outermost first")
    m.add_argument("--k", required=True, help="comma-separated half-orders")
    m.add_argument("--t", type=float, default=1.0)
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")

    r = sub.add_parser("rerun", help="re-execute a manifest and compare its digest")
    r.add_argument("manifest")
    return p


COMMANDS = {
    "verify-pde": cmd_verify_pde,
    "verify-identities": cmd_verify_identities,
    "density": cmd_density,
    "sample": cmd_sample,
    "moments": cmd_moments,
    "rerun": cmd_rerun,
}


def _glue_ranges(argv):
    """Let ``--x -3:3:0.1`` through: argparse would read the value as an option."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--x", "--grid") and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and len(argv[i + 1]) > 1 and (argv[i + 1][1].isdigit() or argv[i + 1][1] == "."):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None, _capture=None) -> int:
    argv = _glue_ranges(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    if _capture is not None:
        global _write_manifest
        original = _write_manifest

        def capturing(*a, **kw):
            m = original(*a, **kw)
            _capture["manifest"] = m
            return m
        _write_manifest = capturing
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"iterlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"iterlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IterlabError as exc:
        print(f"iterlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        if _capture is not None:
            _write_manifest = original


def entry() -> None:
    raise SystemExit(main())
