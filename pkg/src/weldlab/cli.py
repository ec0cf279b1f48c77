"""Command-line interface: qs, weld, sew, holo and rerun.

Exit codes: 0 success, 1 a check ran and failed, 2 input error,
3 numerical failure.  Every command can write a run manifest holding the
argument vector, input and output digests and the tool version; ``rerun``
replays a manifest and compares output digests.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .beltrami_solver import DivergenceError
from .circle_maps import CircleMapFormatError, DegenerateMapError, from_csv, qs_constant
from .holomorphy_lab import FamilyEvaluationError, FamilySpec, holomorphy_report, t_grid
from .rigged_spheres import CoincidentPoints, InvalidSurface, NonRoundBoundary, surface_from_dict
from .sewing import SEAM_TOL, SewingFailure, sew
from .welding import DEFAULT_GRID_N, WELD_TOL, CurveNotSimple, WeldingFailure, weld

OK, CHECK_FAILED, INPUT_ERROR, NUMERICAL_FAILURE = 0, 1, 2, 3


class InputError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _plain(x):
    """JSON-ready copy: complex as [re, im], numpy scalars as Python floats."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [_plain(x.real), _plain(x.imag)]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x) + 0.0
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _emit(text: str, path, outputs: dict):
    data = text.encode()
    if path:
        Path(path).write_bytes(data)
        outputs[str(path)] = _digest(data)
    else:
        sys.stdout.write(text)
        outputs["<stdout>"] = _digest(data)


def _json_input(path):
    try:
        return json.loads(_read(path).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _circle_map(path):
    try:
        return from_csv(_read(path).decode())
    except (UnicodeDecodeError, CircleMapFormatError, DegenerateMapError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# -- commands ------------------------------------------------------------------

def cmd_qs(args, outputs):
    m = _circle_map(args.map)
    est = qs_constant(m, depth=args.depth)
    payload = {"k": est.k, "scales": est.scales, "worst_site": est.worst_site, "depth": args.depth}
    _emit(dumps(payload), args.out, outputs)
    return OK if math.isfinite(est.k) else CHECK_FAILED


def cmd_weld(args, outputs):
    h = _circle_map(args.map)
    try:
        pair = weld(h, grid_n=args.grid, samples=args.n, tol=args.tol, check=False)
    except (DivergenceError, WeldingFailure, CurveNotSimple) as exc:
        raise NumericalFailure(str(exc)) from exc
    payload = json.loads(pair.to_json())
    payload["tol"] = args.tol
    payload["diagnostics"] = pair.diagnostics
    payload["taylor"] = pair.taylor
    payload["laurent"] = pair.laurent
    _emit(dumps(payload), args.out, outputs)
    if args.svg:
        _emit(pair.to_svg(), args.svg, outputs)
    if not pair.residual <= args.tol:
        print(f"weld: residual {pair.residual:.3g} above tolerance {args.tol:.3g}", file=sys.stderr)
        return NUMERICAL_FAILURE
    return OK


def _surface(path):
    try:
        return surface_from_dict(_json_input(path), base_dir=Path(path).parent)
    except (KeyError, TypeError, ValueError, InvalidSurface, CoincidentPoints) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: invalid rigged sphere ({exc})") from exc


def cmd_sew(args, outputs):
    s1, s2 = _surface(args.left), _surface(args.right)
    for s, k, name in ((s1, args.i, "left"), (s2, args.j, "right")):
        if not 0 <= k < len(s.boundaries):
            raise InputError(f"{name} piece has no boundary {k} (it has {len(s.boundaries)})")
    try:
        sewn = sew(s1, args.i, s2, args.j, samples=args.n, grid_n=args.grid, tol=args.tol)
    except NonRoundBoundary as exc:
        raise InputError(str(exc)) from exc
    except (SewingFailure, DivergenceError, WeldingFailure, CoincidentPoints) as exc:
        raise NumericalFailure(str(exc)) from exc
    payload = sewn.to_dict()
    payload["input_digests"] = {"left": _digest(_read(args.left)), "right": _digest(_read(args.right))}
    _emit(dumps(payload), args.out, outputs)
    if args.svg:
        _emit(sewn.to_svg(), args.svg, outputs)
    return OK


def cmd_holo(args, outputs):
    try:
        spec = FamilySpec.from_dict(_json_input(args.family))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.family}: invalid family ({exc})") from exc
    grid = t_grid(spec.t_domain, args.grid)
    try:
        report = holomorphy_report(spec, grid, args.delta)
    except FamilyEvaluationError as exc:
        raise NumericalFailure(str(exc)) from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(report.to_csv(), args.out, outputs)
    _emit(dumps(report.summary()), args.summary, outputs)
    return OK if report.passed else CHECK_FAILED


def cmd_rerun(args, outputs):
    manifest = _json_input(args.manifest)
    try:
        argv, expected = manifest["argv"], manifest["outputs"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{args.manifest}: not a run manifest") from exc
    for path, digest in manifest.get("inputs", {}).items():
        if _digest(_read(path)) != digest:
            print(f"rerun: input {path} changed since the manifest was written", file=sys.stderr)
            return CHECK_FAILED
    code = main(argv)
    if code != manifest.get("exit_code", OK):
        print(f"rerun: exit code {code}, manifest recorded {manifest.get('exit_code')}", file=sys.stderr)
        return CHECK_FAILED
    bad = [p for p, d in expected.items() if p != "<stdout>" and _digest(_read(p)) != d]
    for p in bad:
        print(f"rerun: output {p} differs from the manifest", file=sys.stderr)
    outputs.update({p: d for p, d in expected.items()})
    return CHECK_FAILED if bad else OK


# -- driver --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weldlab", description="conformal welding and sewing of rigged spheres")
    p.add_argument("--version", action="version", version=f"weldlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, out_help="output path (default stdout)"):
        q.add_argument("--out", help=out_help)
        q.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json when --out is given)")

    q = sub.add_parser("qs", help="quasisymmetry constant of a circle map")
    q.add_argument("map")
    q.add_argument("--depth", type=int, default=8)
    common(q)
    q.set_defaults(run=cmd_qs, inputs=("map",))

    q = sub.add_parser("weld", help="conformal welding of a circle map")
    q.add_argument("map")
    q.add_argument("--n", type=int, default=None, help="boundary samples")
    q.add_argument("--grid", type=int, default=DEFAULT_GRID_N, help="solver grid size")
    q.add_argument("--tol", type=float, default=WELD_TOL)
    q.add_argument("--svg")
    common(q)
    q.set_defaults(run=cmd_weld, inputs=("map",))

    q = sub.add_parser("sew", help="sew two rigged spheres along a boundary each")
    q.add_argument("left")
    q.add_argument("i", type=int)
    q.add_argument("right")
    q.add_argument("j", type=int)
    q.add_argument("--n", type=int, default=None, help="boundary samples")
    q.add_argument("--grid", type=int, default=DEFAULT_GRID_N, help="solver grid size")
    q.add_argument("--tol", type=float, default=SEAM_TOL)
    q.add_argument("--svg")
    common(q)
    q.set_defaults(run=cmd_sew, inputs=("left", "right"))

    q = sub.add_parser("holo", help="Wirtinger holomorphy certificate for a family")
    q.add_argument("family")
    q.add_argument("--grid", type=float, default=None, help="half-width rho of the 3x3 t grid")
    q.add_argument("--delta", type=float, default=1e-3)
    q.add_argument("--summary", help="summary JSON path (default stdout)")
    common(q, "CRReport CSV path (default stdout)")
    q.set_defaults(run=cmd_holo, inputs=("family",))

    q = sub.add_parser("rerun", help="replay a run manifest and compare outputs")
    q.add_argument("manifest")
    q.set_defaults(run=cmd_rerun, inputs=("manifest",))
    return p


def _write_manifest(args, argv, code, outputs, wall):
    inputs = {}
    for name in args.inputs:
        path = getattr(args, name)
        try:
            inputs[path] = _digest(Path(path).read_bytes())
        except OSError:
            pass
    params = {k: v for k, v in vars(args).items() if k not in ("run", "inputs", "manifest")}
    manifest = {"command": args.command, "argv": argv, "parameters": params, "inputs": inputs,
                "outputs": outputs, "exit_code": code, "version": __version__, "wall_time": wall}
    Path(args.manifest).write_text(dumps(manifest))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    outputs = {}
    start = time.perf_counter()
    try:
        code = args.run(args, outputs)
    except InputError as exc:
        print(f"weldlab {args.command}: {exc}", file=sys.stderr)
        code = INPUT_ERROR
    except NumericalFailure as exc:
        print(f"weldlab {args.command}: numerical failure: {exc}", file=sys.stderr)
        code = NUMERICAL_FAILURE
    if not args.manifest and getattr(args, "out", None) and args.command != "rerun":
        args.manifest = f"{args.out}.manifest.json"
    if args.manifest and args.command != "rerun":
        manifest_argv = [a for k, a in enumerate(argv)
                         if a != "--manifest" and (k == 0 or argv[k - 1] != "--manifest")
                         and not a.startswith("--manifest=")]
        _write_manifest(args, manifest_argv, code, outputs, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
