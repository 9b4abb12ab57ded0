"""
Command line front end.

Exit codes: 0 on success, 1 on a numerical failure (interface assumption,
inverted element, solver breakdown), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from .analysis import (CONVERGENCE_HEADER, StudyError, convergence_study, error_norms,
                       problem_for_interface, radial_manufactured, solve)
from .conditioning import CONDITION_HEADER, condition_study
from .fitting import FittingError, fit_mesh, reference_patch_sweep, verify_angles
from .geometry import DegenerateGeometryError
from .interface import AssumptionViolated, parse_interface
from .linalg import ConvergenceError, NotSPDError
from .mesh import build_patch_mesh, mesh_size, write_mesh

NUMERICAL_ERRORS = (AssumptionViolated, FittingError, DegenerateGeometryError, ConvergenceError,
                    NotSPDError, StudyError, ArithmeticError)


def _interface_arg(text: str):
    try:
        return parse_interface(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patchfem", description=__doc__.strip().splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="fit, assemble and solve one problem")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--kappa1", type=_positive_float, required=True)
    s.add_argument("--kappa2", type=_positive_float, required=True)
    s.add_argument("--interface", type=_interface_arg, required=True)
    s.add_argument("--no-scaling", action="store_true")
    s.add_argument("--out", type=Path, help="write the nodal solution as CSV")

    c = sub.add_parser("convergence", help="error and rate table on nested meshes")
    c.add_argument("--n0", type=_positive_int, default=4)
    c.add_argument("--levels", type=_positive_int, default=6)
    c.add_argument("--kappa1", type=_positive_float, default=1.0)
    c.add_argument("--kappa2", type=_positive_float, default=10.0)
    c.add_argument("--radius", type=_positive_float, default=0.5)
    c.add_argument("--out", type=Path)

    a = sub.add_parser("angles", help="maximum child angle over the reference patch")
    a.add_argument("--sweep", type=_positive_int, required=True)

    k = sub.add_parser("condition", help="condition numbers per level")
    k.add_argument("--n0", type=_positive_int, default=4)
    k.add_argument("--levels", type=_positive_int, default=4)
    k.add_argument("--no-scaling", action="store_true")
    k.add_argument("--sliver-sweep", action="store_true")
    k.add_argument("--sliver-n", type=_positive_int, help="mesh for the sweep (default 2*n0)")
    k.add_argument("--kappa1", type=_positive_float, default=1.0)
    k.add_argument("--kappa2", type=_positive_float, default=10.0)
    k.add_argument("--radius", type=_positive_float, default=0.5)
    k.add_argument("--out", type=Path)

    e = sub.add_parser("export-mesh", help="write the fitted mesh")
    e.add_argument("--n", type=_positive_int, required=True)
    e.add_argument("--interface", type=_interface_arg, required=True)
    e.add_argument("--out", type=Path, required=True)
    return p


@contextmanager
def _sink(path: Path | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _cmd_solve(ns) -> None:
    mp = problem_for_interface(ns.interface, ns.kappa1, ns.kappa2)
    mesh = build_patch_mesh(ns.n)
    f = fit_mesh(mesh, ns.interface)
    sol = solve(f, mp.spec, scaling=not ns.no_scaling)
    l2, h1 = error_norms(f, sol.values, mp)
    ang, _ = verify_angles(f)
    if ns.out is not None:
        with open(ns.out, "w") as fh:
            fh.write("index,x,y,u\n")
            for i, ((x, y), u) in enumerate(zip(f.vertices, sol.values)):
                fh.write(f"{i},{float(x)!r},{float(y)!r},{float(u)!r}\n")
    summary = [("nverts", f.n_vertices), ("nelems", f.n_elements), ("cut_patches", len(f.configs)),
               ("h", f"{mesh_size(f.mesh):.6g}"), ("cg_iterations", sol.cg.iterations),
               ("cg_residual", f"{sol.cg.residual:.3e}"), ("l2_error", f"{l2:.6e}"),
               ("h1_error", f"{h1:.6e}"), ("max_angle_deg", f"{ang:.3f}")]
    for key, val in summary:
        print(f"{key},{val}")


def _cmd_convergence(ns) -> None:
    if ns.levels < 2:
        raise _Usage("convergence needs --levels >= 2")
    if not ns.radius < 1:
        raise _Usage("--radius must lie in (0, 1)")
    mp = radial_manufactured(ns.kappa1, ns.kappa2, ns.radius)
    rows = convergence_study(mp, ns.n0, ns.levels)
    with _sink(ns.out) as fh:
        fh.write(CONVERGENCE_HEADER + "\n")
        for r in rows:
            fh.write(r.csv() + "\n")


def _cmd_angles(ns) -> None:
    if ns.sweep < 2:
        raise _Usage("--sweep must be at least 2")
    print(f"max_angle_deg,{reference_patch_sweep(ns.sweep):.10f}")


def _cmd_condition(ns) -> None:
    if ns.levels < 2:
        raise _Usage("condition needs --levels >= 2")
    if not ns.radius < 1:
        raise _Usage("--radius must lie in (0, 1)")
    spec = radial_manufactured(ns.kappa1, ns.kappa2, ns.radius).spec
    rows = condition_study(spec, ns.n0, ns.levels, with_scaling=not ns.no_scaling,
                           sliver_sweep=ns.sliver_sweep, sliver_n=ns.sliver_n or 2 * ns.n0)
    with _sink(ns.out) as fh:
        fh.write(CONDITION_HEADER + "\n")
        for r in rows:
            fh.write(r.csv() + "\n")


def _cmd_export(ns) -> None:
    f = fit_mesh(build_patch_mesh(ns.n), ns.interface)
    write_mesh(ns.out, f.mesh, tags=f.tags, configs=f.config_rows())
    print(f"wrote {ns.out} ({f.n_vertices} vertices, {f.n_elements} elements, "
          f"{len(f.configs)} cut patches)")


class _Usage(Exception):
    pass


COMMANDS = {"solve": _cmd_solve, "convergence": _cmd_convergence, "angles": _cmd_angles,
            "condition": _cmd_condition, "export-mesh": _cmd_export}


def run_cli(args=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(args)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[ns.command](ns)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())

