"""Command-line scenario runner.

    lightcone-qsd [--config PATH] [--out DIR] [--seed N] [--format csv|json|both] [--quiet]
                  {overlap,kernel,covertime,distinguish,protocol}

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
JSON reports are written with sorted keys and round-trip float reprs, so a
fixed config and seed reproduce them byte for byte. CSV floats use 9
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from . import kernels
from .config import (
    ConfigError,
    ScenarioConfig,
    build_state,
    load_config,
    to_natural,
    unit_scale,
)
from .distinguish import AccessRegion, confusion_matrix, default_observer, default_T_grid, error_curve, truncated_gram
from .errors import LightconeError, NonOrthonormalError, OnConeError
from .lightcone import SpatialSupport, coverage_time, enclosing_ball_of_balls, frame_table
from .position import epsilon_support_radius, position_amplitude
from .protocol import simulate_protocol
from .states import gram_matrix, make_orthogonal_pair, normalize, outcome_matrix

COMMANDS = ("overlap", "kernel", "covertime", "distinguish", "protocol")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------- formatting


def _plain(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _units(cfg: ScenarioConfig) -> dict:
    sc = unit_scale(cfg)
    return {"units": cfg.units.system, "length_unit_m": sc.length_m if sc.si else None}


def _states(nat: ScenarioConfig, need: int | None = None):
    if not nat.states:
        raise ConfigError("states", "at least one state is required")
    if need is not None and len(nat.states) != need:
        raise ConfigError("states", f"this command needs exactly {need} states")
    states = [build_state(nat, i) for i in range(len(nat.states))]
    if nat.pair.recipe == "gram_schmidt":
        if len(states) != 2:
            raise ConfigError("pair.recipe", "gram_schmidt builds a pair from exactly 2 states")
        states = list(make_orthogonal_pair(states[0], states[1], nat.measure))
    return states


def _observer(nat: ScenarioConfig, phis):
    if nat.observer == "auto":
        return default_observer(phis, nat.support.eps)
    return np.asarray(nat.observer, dtype=float)


def _t_grid(nat: ScenarioConfig, phis, observer) -> np.ndarray:
    tg = nat.T_grid
    if tg.values is not None:
        return np.asarray(tg.values, dtype=float)
    if tg.stop is not None:
        if tg.stop <= tg.start:
            raise ConfigError("T_grid.stop", "must exceed T_grid.start")
        return np.linspace(tg.start, tg.stop, tg.num)
    return default_T_grid(phis, observer, tg.num)


# ---------------------------------------------------------------- commands


def cmd_overlap(cfg: ScenarioConfig) -> dict:
    nat = to_natural(cfg)
    states = _states(nat)
    G = gram_matrix(states, nat.measure)
    n = len(states)
    try:
        P = outcome_matrix(states) if nat.measure == "lorentz" else None
    except NonOrthonormalError:
        P = None
    dev = None
    if P is not None:
        ref = np.hstack([np.eye(n), np.zeros((n, 1))])
        dev = float(np.max(np.abs(P - ref)))
    labels = [s.label for s in states]
    doc = {
        "command": "overlap",
        **_units(cfg),
        "field": cfg.field.model_dump(),
        "measure": nat.measure,
        "labels": labels,
        "states": [s.to_dict() for s in states],
        "gram_re": G.entries.real.tolist(),
        "gram_im": G.entries.imag.tolist(),
        "gram_error": G.error,
        "orthonormal": P is not None,
        "outcome_matrix": None if P is None else P.tolist(),
        "max_deviation": dev,
    }
    rows = []
    for i in range(n):
        for j in range(n):
            g = G.entries[i, j]
            rows.append({
                "i": i, "j": j, "label_i": labels[i], "label_j": labels[j],
                "gram_re": float(g.real), "gram_im": float(g.imag), "abs2": float(abs(g) ** 2),
                "outcome_prob": None if P is None else float(P[i, j]),
            })
    cols = ("i", "j", "label_i", "label_j", "gram_re", "gram_im", "abs2", "outcome_prob")
    return {"overlap.json": doc, "overlap.csv": to_csv(cols, rows)}


KERNEL_COLUMNS = (
    "lambda2", "interior_re", "interior_im", "exterior_re", "exterior_im", "cone_delta_coeff", "asymptotic_ratio",
)


def kernel_rows(m: float, lambda2, sign: str = "plus", x0_sign: int = 1) -> list[dict]:
    rows = []
    for lam2 in lambda2:
        lam2 = float(lam2)
        pt = kernels.IntervalPoint(lam2, x0_sign)
        row = dict.fromkeys(KERNEL_COLUMNS)
        row["lambda2"] = lam2
        try:
            if sign == "sum":
                v = kernels.pauli_jordan_value(m, pt)
            else:
                v = kernels.dplus_parts(m, pt, sign)
        except OnConeError:
            # only the delta coefficient exists on the cone
            row["cone_delta_coeff"] = (2.0 if sign == "sum" else 1.0) * kernels._CONE
            rows.append(row)
            continue
        row.update(
            interior_re=v.interior.real,
            interior_im=v.interior.imag,
            exterior_re=v.exterior.real,
            exterior_im=v.exterior.imag,
            cone_delta_coeff=v.cone_delta_coeff,
        )
        if lam2 < 0 and m > 0:
            row["asymptotic_ratio"] = kernels.tail_asymptotic_ratio(m, math.sqrt(-lam2))
        rows.append(row)
    return rows


def cmd_kernel(cfg: ScenarioConfig) -> dict:
    nat = to_natural(cfg)
    k = nat.kernel
    rows = kernel_rows(k.mass, k.lambda2, k.sign, k.x0_sign)
    sc = unit_scale(cfg)
    for row in rows:
        row["lambda2"] = sc.area_out(row["lambda2"])
        for key in ("interior_re", "interior_im", "exterior_re", "exterior_im"):
            row[key] = sc.inv_area_out(row[key])
    doc = {
        "command": "kernel",
        **_units(cfg),
        "mass": k.mass,
        "sign": k.sign,
        "x0_sign": k.x0_sign,
        "rows": rows,
    }
    return {"kernel.json": doc, "kernel.csv": to_csv(KERNEL_COLUMNS, rows)}


def _support(nat: ScenarioConfig) -> SpatialSupport:
    s = nat.support
    if s.kind == "interval":
        return SpatialSupport.interval(*s.interval)
    if s.kind == "ball":
        return SpatialSupport.ball(s.center, s.radius)
    if s.kind == "points":
        return SpatialSupport.point_cloud(s.points)
    if not nat.states:
        raise ConfigError("support.kind", "'state' support needs at least one configured state")
    balls = []
    for i in range(len(nat.states)):
        phi = position_amplitude(normalize(build_state(nat, i), nat.measure))
        c = phi.centroid
        balls.append((c, epsilon_support_radius(phi, c, s.eps)))
    (c, r), *rest = balls
    for c2, r2 in rest:
        c, r = enclosing_ball_of_balls(c, r, c2, r2)
    return SpatialSupport.ball(c, r, eps=s.eps)


def cmd_covertime(cfg: ScenarioConfig) -> dict:
    nat = to_natural(cfg)
    sc = unit_scale(cfg)
    sup = _support(nat)
    obs = None if nat.observer == "auto" else nat.observer
    res = coverage_time(sup, obs)
    if sup.kind == "interval":
        length = sup.x_right - sup.x_left
    else:
        length = 2.0 * sup.enclosing_ball()[1]
    table = frame_table(length, nat.covertime.betas) if length > 0 else []
    for row in table:
        row["t_prime"] = sc.time_out(row["t_prime"])
        row["t_original"] = sc.time_out(row["t_original"])
    t_orig = [row["t_original"] for row in table]
    sup_doc = {"kind": sup.kind}
    if sup.kind == "interval":
        sup_doc["interval"] = sc.length_out([sup.x_left, sup.x_right])
    elif sup.kind == "ball":
        sup_doc.update(center=sc.length_out(list(sup.center)), radius=sc.length_out(sup.radius))
    else:
        sup_doc["points"] = sc.length_out([list(p) for p in sup.points])
    doc = {
        "command": "covertime",
        **_units(cfg),
        "support": sup_doc,
        "t_min": sc.time_out(res.t_min),
        "observer": sc.length_out(res.observer.tolist()),
        "certificate": sc.length_out([list(map(float, p)) for p in res.certificate]),
        "eps": res.eps,
        "length": sc.length_out(length),
        "frame_table": table,
        "t_original_spread": (max(t_orig) - min(t_orig)) if t_orig else 0.0,
    }
    out = {"covertime.json": doc}
    if table:
        out["covertime_frames.csv"] = to_csv(("beta", "t_prime", "t_original"), table)
    return out


def _pair_setup(nat: ScenarioConfig):
    pair = _states(nat, need=2)
    phis = [position_amplitude(s) for s in pair]
    return phis, _observer(nat, phis)


def cmd_distinguish(cfg: ScenarioConfig) -> dict:
    nat = to_natural(cfg)
    phis, observer = _pair_setup(nat)
    T = _t_grid(nat, phis, observer)
    rep = error_curve(phis, observer, T)
    sc = unit_scale(cfg)
    if sc.si:
        rep = dataclasses.replace(rep, T=sc.time_out(rep.T), observer=sc.length_out(rep.observer))
        if rep.fit is not None:
            f = rep.fit
            rep.fit = dataclasses.replace(f, slope=sc.rate_out(f.slope), window=tuple(sc.time_out(list(f.window))))
    doc = {"command": "distinguish", **_units(cfg), **rep.to_dict()}
    return {"distinguish.json": doc, "distinguish.csv": rep.to_csv()}


def cmd_protocol(cfg: ScenarioConfig, seed: int | None = None) -> dict:
    nat = to_natural(cfg)
    pc = nat.protocol
    phis, observer = _pair_setup(nat)
    if pc.T is not None:
        T = pc.T
    elif nat.T_grid.values is not None:
        T = nat.T_grid.values[-1]
    elif nat.T_grid.stop is not None:
        T = nat.T_grid.stop
    else:
        raise ConfigError("protocol.T", "set protocol.T or an explicit T grid")
    G = truncated_gram(phis, AccessRegion(observer, T))
    C, _ = confusion_matrix(G)
    stats = simulate_protocol(C, pc.rounds, pc.seed if seed is None else seed, pc.policy)
    doc = {
        "command": "protocol",
        **_units(cfg),
        **stats.to_dict(),
        "T": unit_scale(cfg).time_out(T),
        "observer": unit_scale(cfg).length_out(observer.tolist()),
        "confusion": C.tolist(),
    }
    return {"protocol.json": doc}


# ---------------------------------------------------------------- entry point


def _global_flags(ap: argparse.ArgumentParser, default) -> None:
    ap.add_argument("--config", metavar="PATH", default=default, help="scenario JSON file")
    ap.add_argument("--out", metavar="DIR", default=default, help="directory for reports (default: output.dir or cwd)")
    ap.add_argument("--seed", type=int, metavar="N", default=default, help="override protocol.seed")
    ap.add_argument("--format", choices=("csv", "json", "both"), default=default, help="report formats to write")
    ap.add_argument("--quiet", action="store_true", default=default, help="do not echo the report to stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lightcone-qsd", description="Finite-time state identification scenarios.")
    _global_flags(ap, None)
    ap.set_defaults(quiet=False)
    # the same flags after the subcommand; SUPPRESS keeps them from clobbering earlier values
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("overlap", parents=[common], help="Gram matrix and outcome probabilities")
    kp = sub.add_parser("kernel", parents=[common], help="commutator function table")
    kp.add_argument("--mass", type=float, help="override kernel.mass")
    kp.add_argument("--lambda2", help="comma separated invariant intervals")
    kp.add_argument("--sign", choices=("plus", "minus", "sum"))
    sub.add_parser("covertime", parents=[common], help="minimum light-cone coverage time")
    sub.add_parser("distinguish", parents=[common], help="effective error versus access time")
    sub.add_parser("protocol", parents=[common], help="Monte-Carlo identification rounds")
    return ap


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    # unset fields stay unset so SI defaults still resolve the same way
    doc = cfg.model_dump(exclude_unset=True)
    if args.command == "kernel":
        kern = doc.setdefault("kernel", {})
        if args.mass is not None:
            kern["mass"] = args.mass
        if args.lambda2 is not None:
            try:
                kern["lambda2"] = [float(v) for v in args.lambda2.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError("--lambda2", str(exc)) from exc
        if args.sign is not None:
            kern["sign"] = args.sign
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be >= 0")
        doc.setdefault("protocol", {})["seed"] = args.seed
    if args.format is not None:
        doc.setdefault("output", {})["format"] = args.format
    if args.out is not None:
        doc.setdefault("output", {})["dir"] = args.out
    return load_config(doc)


def _write(cfg: ScenarioConfig, files: dict, quiet: bool) -> None:
    fmt = cfg.output.format
    out_dir = cfg.output.dir or os.getcwd()
    os.makedirs(out_dir, exist_ok=True)
    for name, content in files.items():
        ext = name.rsplit(".", 1)[1]
        if fmt != "both" and ext != fmt:
            continue
        text = dumps(content) if ext == "json" else content
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if not quiet:
            sys.stdout.write(f"# {path}\n{text}")


def run(args) -> dict:
    cfg = load_config(args.config) if args.config else load_config({})
    cfg = _apply_overrides(cfg, args)
    if args.command == "overlap":
        files = cmd_overlap(cfg)
    elif args.command == "kernel":
        files = cmd_kernel(cfg)
    elif args.command == "covertime":
        files = cmd_covertime(cfg)
    elif args.command == "distinguish":
        files = cmd_distinguish(cfg)
    else:
        files = cmd_protocol(cfg)
    _write(cfg, files, args.quiet)
    return files


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LightconeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
