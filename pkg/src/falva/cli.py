"""Command line front end.

Subcommands: deriv | action | residual | solve-ivp | solve-bvp | minimize |
sweep.  Problem parameters come from a flat key=value spec file (--spec)
and/or flags; flags override file keys.  Axis-specific keys carry .x/.y/.z
suffixes (domain.y=0,1); bare "domain"/"n" mean the x axis.

All output is CSV: one leading comment line with the tool version and the
order-pair convention, optional further comment lines with scalar results,
a header row, then data rows.  Floats are printed with 17 significant
digits and LF line endings, so identical specs produce byte-identical
files.  Failures print a single "FALVA-ERR <code>: ..." line on stderr and
exit with status 2 (validation) or 3 (numerical).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .action import (
    action_1d,
    action_1d_cresson,
    action_2d,
    action_nd,
    trapezoid_action,
)
from .errors import FalvaError, NonConvergedError, SpecError
from .euler import (
    BoundaryData1D,
    direct_minimize,
    el_residual_1d,
    el_residual_1d_cresson,
    el_residual_2d,
    el_residual_nd,
    solve_el_bvp,
    solve_el_ivp,
)
from .exprdsl import evaluate, parse
from .fracops import (
    ORDER_CONVENTION,
    GridFunctionND,
    OrderSet,
    cresson,
    rl_left,
    rl_right,
    axis_cresson,
)
from .numcore import Grid1D, GridFunction

KINDS = ("deriv", "action", "residual", "solve-ivp", "solve-bvp",
         "minimize", "sweep")

_AXES = ("x", "y", "z")

_KNOWN_KEYS = {
    "kind", "lagrangian", "alpha", "beta", "delta", "chi", "gamma",
    "path", "path_file", "qdot", "boundary", "margin_target", "q0", "v0",
    "operator", "axis", "variant", "out", "format", "sweep_kind",
    "domain", "n",
} | {f"domain.{a}" for a in _AXES} | {f"n.{a}" for a in _AXES}

_COORD_SLOTS = {1: ("tau",), 2: ("x", "y"), 3: ("x1", "x2", "x3")}


class _ArgumentParser(argparse.ArgumentParser):
    # route argparse failures through the FALVA-ERR machinery
    def error(self, message):
        raise SpecError(message)


def _build_parser() -> _ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="key=value problem spec file")
    common.add_argument("--lagrangian", help="Lagrangian expression")
    common.add_argument("--alpha", help="order(s), scalar or comma list")
    common.add_argument("--beta", help="order(s)")
    common.add_argument("--delta", help="order(s)")
    common.add_argument("--chi", help="order(s)")
    common.add_argument("--gamma", help="complex weight: RE,IM or i or -i")
    common.add_argument("--domain", action="append",
                        help="LO,HI per axis (repeat for y, z)")
    common.add_argument("--n", action="append",
                        help="intervals per axis (repeat for y, z)")
    common.add_argument("--path", help="path/field expression over the coordinates")
    common.add_argument("--path-file", dest="path_file",
                        help="CSV field file with a shape header line")
    common.add_argument("--qdot", help="analytic velocity expression (1D)")
    common.add_argument("--boundary", help="qa,qb endpoint values")
    common.add_argument("--margin-target", dest="margin_target",
                        help="boundary value at the truncated match time")
    common.add_argument("--q0", help="initial position (solve-ivp)")
    common.add_argument("--v0", help="initial velocity (solve-ivp)")
    common.add_argument("--operator", choices=("left", "right", "cresson"),
                        help="deriv operator (default cresson)")
    common.add_argument("--axis", choices=_AXES, help="deriv axis for ND fields")
    common.add_argument("--variant", choices=("classic", "cresson"),
                        help="1D action/residual variant")
    common.add_argument("--sweep-kind", dest="sweep_kind",
                        help="underlying kind for sweep (default action)")
    common.add_argument("--out", help="output file path")
    common.add_argument("--format", dest="format", help="output format (csv)")

    parser = _ArgumentParser(prog="falva",
                             description="fractional action-like variational toolkit")
    sub = parser.add_subparsers(dest="kind")
    for kind in KINDS:
        sub.add_parser(kind, parents=[common])
    return parser


# ---------------------------------------------------------------------------
# spec assembly


def _load_spec_file(path: str) -> dict:
    table = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise SpecError(f"cannot read spec file {path!r}: {err}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if key not in _KNOWN_KEYS:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
        table[key] = value.strip()
    return table


def _merge(args) -> "Spec":
    table = _load_spec_file(args.spec) if args.spec else {}
    if "kind" in table and table["kind"] != args.kind:
        raise SpecError(
            f"spec file kind {table['kind']!r} conflicts with subcommand {args.kind!r}"
        )
    scalar_flags = ("lagrangian", "alpha", "beta", "delta", "chi", "gamma",
                    "path", "path_file", "qdot", "boundary", "margin_target",
                    "q0", "v0", "operator", "axis", "variant", "sweep_kind",
                    "out", "format")
    for name in scalar_flags:
        value = getattr(args, name, None)
        if value is not None:
            table[name] = value
    for name in ("domain", "n"):
        values = getattr(args, name, None)
        if values:
            if len(values) > len(_AXES):
                raise SpecError(f"too many --{name} axes (max {len(_AXES)})")
            for key in [name] + [f"{name}.{a}" for a in _AXES]:
                table.pop(key, None)
            for i, v in enumerate(values):
                table[f"{name}.{_AXES[i]}"] = v
    # bare keys are the x axis
    for name in ("domain", "n"):
        if name in table:
            table.setdefault(f"{name}.x", table.pop(name))
    return Spec(args.kind, table)


class Spec:
    """Merged problem description with typed accessors."""

    def __init__(self, kind: str, table: dict):
        if kind not in KINDS:
            raise SpecError(f"unknown kind {kind!r}")
        self.kind = kind
        self.table = table

    def get(self, key, default=None):
        return self.table.get(key, default)

    def req(self, key) -> str:
        if key not in self.table:
            raise SpecError(f"missing required key {key!r} for kind {self.kind!r}")
        return self.table[key]

    def floats(self, key) -> list:
        raw = self.req(key)
        try:
            return [float(part) for part in raw.split(",")]
        except ValueError:
            raise SpecError(f"key {key!r}: expected number(s), got {raw!r}") from None

    def scalar(self, key, default=None) -> float:
        if key not in self.table:
            if default is None:
                raise SpecError(f"missing required key {key!r}")
            return default
        values = self.floats(key)
        if len(values) != 1:
            raise SpecError(f"key {key!r} must be a single number")
        return values[0]

    def gamma_w(self, default=None) -> complex:
        raw = self.get("gamma")
        if raw is None:
            if default is None:
                raise SpecError("missing required key 'gamma'")
            return default
        text = raw.strip().lower()
        if text == "i":
            return 1j
        if text == "-i":
            return -1j
        parts = text.split(",")
        try:
            if len(parts) == 1:
                return complex(float(parts[0]), 0.0)
            if len(parts) == 2:
                return complex(float(parts[0]), float(parts[1]))
        except ValueError:
            pass
        raise SpecError(f"key 'gamma': expected RE,IM or i or -i, got {raw!r}")

    def pair(self, key) -> tuple:
        values = self.floats(key)
        if len(values) != 2:
            raise SpecError(f"key {key!r} must be LO,HI")
        return values[0], values[1]

    def dimension(self) -> int:
        dims = [f"domain.{a}" in self.table for a in _AXES]
        if not dims[0]:
            raise SpecError("missing required key 'domain' (or 'domain.x')")
        dim = 1 + (1 if dims[1] else 0) + (1 if dims[2] else 0)
        if dims[2] and not dims[1]:
            raise SpecError("domain.z given without domain.y")
        return dim

    def grids(self) -> tuple:
        dim = self.dimension()
        grids = []
        for i in range(dim):
            lo, hi = self.pair(f"domain.{_AXES[i]}")
            nk = f"n.{_AXES[i]}"
            if nk not in self.table and "n.x" in self.table:
                nk = "n.x"  # one n serves all axes unless overridden
            n = self.scalar(nk)
            if n != int(n):
                raise SpecError(f"key {nk!r} must be an integer")
            grids.append(Grid1D(lo, hi, int(n)))
        return tuple(grids)


def _orders_for(spec: Spec, dim: int, alpha_override=None) -> OrderSet:
    if alpha_override is not None:
        alphas = [float(alpha_override)] * dim
    else:
        alphas = spec.floats("alpha")
        if len(alphas) == 1:
            alphas = alphas * dim
        if len(alphas) != dim:
            raise SpecError(f"'alpha' needs 1 or {dim} entries for dimension {dim}")
    gamma_w = spec.gamma_w(default=-1j)
    if dim == 1:
        beta = spec.scalar("beta", default=alphas[0])
        return OrderSet.for_1d(alphas[0], beta, gamma_w)
    if dim == 2:
        beta = spec.scalar("beta", default=alphas[1])
        delta = spec.scalar("delta", default=alphas[0])
        chi = spec.scalar("chi", default=beta)
        return OrderSet.for_2d(alphas[0], beta, delta, chi, gamma_w)
    if "delta" in spec.table:
        deltas = spec.floats("delta")
        if len(deltas) == 1:
            deltas = deltas * dim
        if len(deltas) != dim:
            raise SpecError(f"'delta' needs 1 or {dim} entries")
    else:
        deltas = alphas
    return OrderSet.for_nd(alphas, deltas, gamma_w)


def _sample_expression(expr_text: str, slot_names, grids) -> np.ndarray:
    expr = parse(expr_text)
    extra = set(expr.free_vars) - set(slot_names)
    if extra:
        raise SpecError(
            f"path expression uses {sorted(extra)}; allowed coordinates "
            f"are {list(slot_names)}"
        )
    meshes = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
    env = dict(zip(slot_names, meshes))
    shape = tuple(g.n + 1 for g in grids)
    return np.broadcast_to(np.asarray(evaluate(expr, env)), shape).copy()


def _read_field_file(path: str, grids) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as err:
        raise SpecError(f"cannot read field file {path!r}: {err}") from None
    if not lines or not lines[0].lower().startswith("shape"):
        raise SpecError(f"field file {path!r} must start with a 'shape,...' line")
    shape = tuple(int(p) for p in lines[0].split(",")[1:])
    expected = tuple(g.n + 1 for g in grids)
    if shape != expected:
        raise SpecError(
            f"field file shape {shape} does not match the grid shape {expected}"
        )
    values = np.array([float(v) for v in lines[1:]])
    if values.size != int(np.prod(shape)):
        raise SpecError(
            f"field file holds {values.size} values, expected {int(np.prod(shape))}"
        )
    return values.reshape(shape)


def _field_for(spec: Spec, grids) -> np.ndarray:
    dim = len(grids)
    if "path" in spec.table and "path_file" in spec.table:
        raise SpecError("give either 'path' or 'path_file', not both")
    if "path" in spec.table:
        return _sample_expression(spec.table["path"], _COORD_SLOTS[dim], grids)
    if "path_file" in spec.table:
        return _read_field_file(spec.table["path_file"], grids)
    raise SpecError("missing required key 'path' (or 'path_file')")


def _qdot_for(spec: Spec, grid: Grid1D):
    if "qdot" not in spec.table:
        return None
    return _sample_expression(spec.table["qdot"], ("tau",), (grid,))


def _variant_for(spec: Spec, dim: int) -> str:
    if dim > 1:
        return "cresson"
    variant = spec.get("variant")
    if variant is None:
        variant = "cresson" if ("gamma" in spec.table or "beta" in spec.table) \
            else "classic"
    if variant not in ("classic", "cresson"):
        raise SpecError(f"unknown variant {variant!r}")
    return variant


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, comments, header, rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise SpecError(f"cannot write output file {path!r}: {err}") from None


def _lead_comment(kind: str) -> str:
    return f"falva {__version__} kind={kind} orders[{ORDER_CONVENTION}]"


# ---------------------------------------------------------------------------
# runners


def _run_deriv(spec: Spec):
    grids = spec.grids()
    dim = len(grids)
    values = _field_for(spec, grids)
    operator = spec.get("operator", "cresson")
    if dim == 1:
        f = GridFunction(grids[0], values)
        if operator == "left":
            out = rl_left(f, spec.scalar("alpha"))
        elif operator == "right":
            out = rl_right(f, spec.scalar("beta", default=spec.scalar("alpha")))
        else:
            out = cresson(f, _orders_for(spec, 1))
        header = ["tau", "f_re", "f_im", "deriv_re", "deriv_im", "flagged"]
        nodes = grids[0].nodes
        rows = [
            [_fmt(nodes[j]), _fmt(np.real(values[j])), _fmt(np.imag(values[j])),
             _fmt(np.real(out.values[j])), _fmt(np.imag(out.values[j])),
             "1" if out.flags[j] else "0"]
            for j in range(grids[0].n + 1)
        ]
        return [], header, rows
    field = GridFunctionND(grids, values)
    axis_name = spec.get("axis", "x")
    axis = _AXES.index(axis_name)
    if axis >= dim:
        raise SpecError(f"axis {axis_name!r} out of range for dimension {dim}")
    if operator != "cresson":
        raise SpecError("ND deriv supports only the cresson operator")
    out = axis_cresson(field, axis, _orders_for(spec, dim))
    coords = _COORD_SLOTS[dim]
    header = list(coords) + ["f_re", "f_im", "deriv_re", "deriv_im", "flagged"]
    meshes = field.node_meshes()
    rows = []
    for idx in np.ndindex(*values.shape):
        rows.append(
            [_fmt(meshes[k][idx]) for k in range(dim)]
            + [_fmt(np.real(values[idx])), _fmt(np.imag(values[idx])),
               _fmt(np.real(out.values[idx])), _fmt(np.imag(out.values[idx])),
               "1" if out.flags[idx] else "0"]
        )
    return [], header, rows


def _action_value(spec: Spec, alpha_override=None):
    grids = spec.grids()
    dim = len(grids)
    expr = parse(spec.req("lagrangian"))
    values = _field_for(spec, grids)
    if dim == 1:
        q = GridFunction(grids[0], values)
        if _variant_for(spec, dim) == "classic":
            alpha = float(alpha_override) if alpha_override is not None \
                else spec.scalar("alpha")
            return action_1d(expr, q, alpha, qdot=_qdot_for(spec, grids[0]))
        return action_1d_cresson(expr, q, _orders_for(spec, dim, alpha_override))
    field = GridFunctionND(grids, values)
    orders = _orders_for(spec, dim, alpha_override)
    observer = tuple(g.t for g in grids)
    if dim == 2:
        return action_2d(expr, field, orders, observer)
    return action_nd(expr, field, orders, observer)


def _run_action(spec: Spec):
    av = _action_value(spec)
    comments = [
        "observer=" + ",".join(_fmt(v) for v in av.observer),
        "weight_orders=" + ",".join(_fmt(v) for v in av.weight_orders),
    ]
    if av.qdot_source:
        comments.append(f"qdot_source={av.qdot_source}")
    header = ["value_re", "value_im", "singular_excluded"]
    rows = [[_fmt(av.value.real), _fmt(av.value.imag),
             str(av.singular_nodes_excluded)]]
    return comments, header, rows


def _residual_field(spec: Spec):
    grids = spec.grids()
    dim = len(grids)
    expr = parse(spec.req("lagrangian"))
    values = _field_for(spec, grids)
    if dim == 1:
        q = GridFunction(grids[0], values)
        if _variant_for(spec, dim) == "classic":
            return el_residual_1d(expr, q, spec.scalar("alpha"),
                                  qdot=_qdot_for(spec, grids[0])), grids
        return el_residual_1d_cresson(expr, q, _orders_for(spec, dim)), grids
    field = GridFunctionND(grids, values)
    orders = _orders_for(spec, dim)
    observer = tuple(g.t for g in grids)
    if dim == 2:
        return el_residual_2d(expr, field, orders, observer), grids
    return el_residual_nd(expr, field, orders, observer), grids


def _run_residual(spec: Spec):
    rf, grids = _residual_field(spec)
    dim = len(grids)
    field = _field_for(spec, grids)
    comments = [
        f"sup_norm={_fmt(rf.sup_norm)}",
        "epsilon_margin=" + ",".join(_fmt(e) for e in rf.epsilon_margin),
    ]
    coords = _COORD_SLOTS[dim]
    header = list(coords) + ["q", "residual_re", "residual_im", "excluded"]
    vals = rf.residual.values
    if dim == 1:
        meshes = [grids[0].nodes]
    else:
        meshes = rf.residual.node_meshes()
    rows = []
    for idx in np.ndindex(*vals.shape):
        rows.append(
            [_fmt(meshes[k][idx]) for k in range(dim)]
            + [_fmt(field[idx]),
               _fmt(np.real(vals[idx])), _fmt(np.imag(vals[idx])),
               "1" if rf.excluded[idx] else "0"]
        )
    return comments, header, rows


def _run_solve_ivp(spec: Spec):
    grids = spec.grids()
    if len(grids) != 1:
        raise SpecError("solve-ivp is one-dimensional")
    g = grids[0]
    expr = parse(spec.req("lagrangian"))
    q, qdot = solve_el_ivp(expr, g.a, g.t, spec.scalar("q0"),
                           spec.scalar("v0"), spec.scalar("alpha"), g.n)
    comments = [f"truncated_t={_fmt(q.grid.t)}"]
    header = ["tau", "q", "qdot"]
    nodes = q.grid.nodes
    rows = [[_fmt(nodes[j]), _fmt(q.values[j]), _fmt(qdot.values[j])]
            for j in range(q.grid.n + 1)]
    return comments, header, rows


def _run_solve_bvp(spec: Spec):
    grids = spec.grids()
    if len(grids) != 1:
        raise SpecError("solve-bvp is one-dimensional")
    g = grids[0]
    qa, qb = spec.pair("boundary")
    bd = BoundaryData1D(g.a, g.t, qa, qb)
    target = None
    if "margin_target" in spec.table:
        target = spec.scalar("margin_target")
    result = solve_el_bvp(parse(spec.req("lagrangian")), bd,
                          spec.scalar("alpha"), g.n, qb_at_margin=target)
    comments = [
        f"v0={_fmt(result.v0)}",
        f"matched_time={_fmt(result.matched_time)}",
        f"target={_fmt(result.target)}",
    ]
    header = ["tau", "q", "qdot"]
    nodes = result.q.grid.nodes
    rows = [[_fmt(nodes[j]), _fmt(result.q.values[j]), _fmt(result.qdot.values[j])]
            for j in range(result.q.grid.n + 1)]
    return comments, header, rows


def _run_minimize(spec: Spec):
    grids = spec.grids()
    if len(grids) != 1:
        raise SpecError("minimize is one-dimensional")
    g = grids[0]
    qa, qb = spec.pair("boundary")
    bd = BoundaryData1D(g.a, g.t, qa, qb)
    result = direct_minimize(parse(spec.req("lagrangian")), bd,
                             spec.scalar("alpha"), g.n)
    comments = [
        f"converged={'true' if result.converged else 'false'}",
        f"iterations={result.iterations}",
        f"grad_norm={_fmt(result.grad_norm)}",
        f"action_value={_fmt(result.action_value)}",
    ]
    header = ["tau", "q"]
    nodes = result.q.grid.nodes
    rows = [[_fmt(nodes[j]), _fmt(result.q.values[j])]
            for j in range(result.q.grid.n + 1)]
    return comments, header, rows, result


def _sweep_summary(spec: Spec, kind: str, alpha: float):
    """Scalar summary of one sweep entry: (complex value, classical_ref)."""
    if kind == "action":
        av = _action_value(spec, alpha_override=alpha)
        classical = None
        if spec.dimension() == 1:
            grids = spec.grids()
            q = GridFunction(grids[0], _field_for(spec, grids))
            classical = trapezoid_action(parse(spec.req("lagrangian")), q,
                                         qdot=_qdot_for(spec, grids[0]))
        return av.value, classical
    sub = Spec(kind, dict(spec.table))
    sub.table["alpha"] = _fmt(alpha)
    if kind == "deriv":
        _, _, rows = _run_deriv(sub)
        return complex(float(rows[-1][-3]), float(rows[-1][-2])), None
    if kind == "residual":
        rf, _ = _residual_field(sub)
        return complex(rf.sup_norm, 0.0), None
    if kind == "solve-ivp":
        _, _, rows = _run_solve_ivp(sub)
        return complex(float(rows[-1][1]), 0.0), None
    if kind == "solve-bvp":
        comments, _, _ = _run_solve_bvp(sub)
        v0 = float(comments[0].split("=", 1)[1])
        return complex(v0, 0.0), None
    if kind == "minimize":
        *_, result = _run_minimize(sub)
        if not result.converged:
            raise NonConvergedError("minimizer hit its iteration cap")
        return complex(result.action_value, 0.0), None
    raise SpecError(f"sweep cannot run kind {kind!r}")


def _run_sweep(spec: Spec):
    alphas = spec.floats("alpha")
    if not alphas:
        raise SpecError("sweep needs a nonempty alpha list")
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise SpecError(f"sweep alpha {a!r} outside (0,1)")
    kind = spec.get("sweep_kind", "action")
    if kind not in KINDS or kind == "sweep":
        raise SpecError(f"unknown sweep_kind {kind!r}")

    def entry(alpha):
        try:
            value, classical = _sweep_summary(spec, kind, alpha)
            return value, classical, "ok"
        except FalvaError as err:
            return None, None, f"FALVA-ERR {err.code}"

    threads = max(1, int(os.environ.get("FALVA_THREADS", "1") or "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(entry, alphas))
    else:
        results = [entry(a) for a in alphas]

    with_classic = kind == "action" and spec.dimension() == 1
    header = ["alpha", "value_re", "value_im", "status"]
    if with_classic:
        header.append("classical_ref")
    rows = []
    for alpha, (value, classical, status) in zip(alphas, results):
        row = [_fmt(alpha)]
        row += ["", ""] if value is None else [_fmt(value.real), _fmt(value.imag)]
        row.append(status)
        if with_classic:
            row.append("" if classical is None else _fmt(classical))
        rows.append(row)
    return [f"sweep_kind={kind}"], header, rows


def _dispatch(spec: Spec) -> int:
    out = spec.req("out")
    fmt = spec.get("format", "csv")
    if fmt != "csv":
        raise SpecError(f"unsupported output format {fmt!r}")
    nonconverged = None
    if spec.kind == "deriv":
        comments, header, rows = _run_deriv(spec)
    elif spec.kind == "action":
        comments, header, rows = _run_action(spec)
    elif spec.kind == "residual":
        comments, header, rows = _run_residual(spec)
    elif spec.kind == "solve-ivp":
        comments, header, rows = _run_solve_ivp(spec)
    elif spec.kind == "solve-bvp":
        comments, header, rows = _run_solve_bvp(spec)
    elif spec.kind == "minimize":
        comments, header, rows, result = _run_minimize(spec)
        if not result.converged:
            nonconverged = NonConvergedError(
                f"minimizer hit its iteration cap (grad_norm={result.grad_norm:g}); "
                f"partial result written to {out}"
            )
    else:
        comments, header, rows = _run_sweep(spec)
    _write_csv(out, [_lead_comment(spec.kind)] + comments, header, rows)
    if nonconverged is not None:
        raise nonconverged
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.kind is None:
            raise SpecError("missing subcommand; expected one of " + ", ".join(KINDS))
        spec = _merge(args)
        return _dispatch(spec)
    except FalvaError as err:
        message = " ".join(str(err).split())
        print(f"FALVA-ERR {err.code}: {message}", file=sys.stderr)
        return err.exit_status


if __name__ == "__main__":
    sys.exit(main())
