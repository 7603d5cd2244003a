"""Command-line driver: configuration, runs and file output."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .admissibility import (
    NozzleSpec,
    Profile,
    admissible_band,
    criterion_Pe,
    criterion_R,
    solve_shock_position,
    solve_shock_positions,
)
from .errors import AxishockError, HypothesisError, InadmissibleExitPressure, NonconvergenceError
from .gas import GasParameters, normal_shock_pair, rh_residual_normal
from .iteration import FreeBoundarySolver, GridSpec, state_norm
from .physical import map_to_physical
from .rankine_hugoniot import kdot, linearized_coefficients

log = logging.getLogger("axishock")

LOG_ENV = "AXISHOCK_LOG"
FIELD_COLUMNS = ["z", "r", "xi", "eta", "theta", "p", "q", "s", "rho", "Mach"]
FRONT_COLUMNS = ["eta", "psi", "psi_prime", "z", "r"]
HISTORY_COLUMNS = [
    "iteration", "diff_sup", "diff_l2", "diff_composite",
    "factor_sup", "factor_l2", "factor_composite", "dxi_star",
]


@dataclass
class RunConfig:
    gamma: float = 1.4
    c_v: float = 1.0
    mach: float | None = 2.0
    q: float | None = None
    p: float = 1.0
    rho: float = 1.0
    L: float = 1.0
    sigma: float = 0.01
    Theta: Profile = field(default_factory=lambda: Profile.polynomial([0, 0, 0, 1]))
    Pe: Profile = field(default_factory=lambda: Profile.constant(1.0))
    n_xi: int = 129
    n_eta: int = 129
    tol: float | None = None
    max_iter: int = 50
    normalize: bool = True
    multi_root: list = field(default_factory=list)
    out: str = "axishock_out"
    admissibility: dict | None = None

    @property
    def gas(self):
        return GasParameters(self.gamma, self.c_v)

    @property
    def upstream_mach(self):
        if self.mach is not None:
            return float(self.mach)
        c = np.sqrt(self.gamma * self.p / self.rho)
        return float(self.q / c)

    def pair(self):
        return normal_shock_pair(self.upstream_mach, self.p, self.rho, self.gas, normalize=True)

    def spec(self):
        return NozzleSpec(self.L, self.sigma, self.Theta, self.Pe)


def _profile(block, name):
    if isinstance(block, (int, float)):
        return Profile.constant(float(block))
    if isinstance(block, list):
        return Profile.polynomial(block)
    if isinstance(block, dict):
        if "coeffs" in block:
            return Profile.polynomial(block["coeffs"])
        if "table" in block:
            t = block["table"]
            return Profile.table(t["x"], t["y"])
        if "x" in block and "y" in block:
            return Profile.table(block["x"], block["y"])
    raise HypothesisError(f"cannot read profile '{name}': give coefficients or a table")


def config_from_dict(d: dict) -> RunConfig:
    cfg = RunConfig()
    gas = d.get("gas", {})
    cfg.gamma = float(gas.get("gamma", cfg.gamma))
    cfg.c_v = float(gas.get("c_v", cfg.c_v))
    up = d.get("upstream", {})
    if "q" in up and "mach" not in up:
        cfg.mach, cfg.q = None, float(up["q"])
    else:
        cfg.mach = float(up.get("mach", cfg.mach))
    cfg.p = float(up.get("p", cfg.p))
    cfg.rho = float(up.get("rho", cfg.rho))
    noz = d.get("nozzle", {})
    cfg.L = float(noz.get("L", cfg.L))
    cfg.sigma = float(noz.get("sigma", cfg.sigma))
    if "Theta" in noz:
        cfg.Theta = _profile(noz["Theta"], "Theta")
    if "Pe" in noz:
        cfg.Pe = _profile(noz["Pe"], "Pe")
    grid = d.get("grid", {})
    cfg.n_xi = int(grid.get("n_xi", cfg.n_xi))
    cfg.n_eta = int(grid.get("n_eta", cfg.n_eta))
    sol = d.get("solver", {})
    cfg.tol = sol.get("tol", cfg.tol)
    cfg.max_iter = int(sol.get("max_iter", cfg.max_iter))
    cfg.normalize = bool(sol.get("normalize", cfg.normalize))
    cfg.multi_root = [float(b) for b in sol.get("multi_root", [])]
    cfg.out = d.get("output", {}).get("dir", cfg.out)
    return cfg


def validate(cfg: RunConfig) -> RunConfig:
    """Re-check the standing hypotheses and attach the admissibility pre-check."""
    if cfg.upstream_mach <= 1.0:
        raise HypothesisError("upstream flow must be supersonic (M > 1)", condition="M- > 1")
    if min(cfg.p, cfg.rho) <= 0:
        raise HypothesisError("upstream pressure and density must be positive")
    if cfg.n_xi < 5 or cfg.n_eta < 5:
        raise HypothesisError("grids need at least 5 nodes per direction")
    cfg.spec().validate(strict=not cfg.multi_root)
    pair = cfg.pair()
    k = kdot(pair)
    lo, hi = admissible_band(cfg.spec(), k)
    pe = criterion_Pe(cfg.spec(), pair)
    cfg.admissibility = {
        "R_low": lo,
        "R_high": hi,
        "Pe": pe,
        "kdot": k,
        "admissible": bool(min(lo, hi) < pe < max(lo, hi)),
    }
    return cfg


def load_config(path, check=True) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise HypothesisError(f"cannot parse {path}: {exc}", stage="config") from exc
    cfg = config_from_dict(data)
    return validate(cfg) if check else cfg


# ----------------------------------------------------------------- output


def _fmt(x):
    return format(float(x), ".16e")


def write_csv(path: Path, columns, rows):
    rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    with open(path, "w") as f:
        f.write(",".join(columns) + "\n")
        for r in rows:
            f.write(",".join(_fmt(v) for v in r) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def write_json(path: Path, obj):
    txt = json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
    Path(path).write_text(txt + "\n")


def criterion_table(cfg: RunConfig, pair, n=201):
    spec = cfg.spec()
    k = kdot(pair)
    pe = criterion_Pe(spec, pair)
    z = np.linspace(0.0, spec.L, n)
    R = np.array([criterion_R(t, spec, k) for t in z])
    return np.column_stack([z, R, np.full(n, pe)])


def field_rows(ph, subsonic, pair, normalize):
    rows = ph.rows(subsonic)
    if not normalize:
        rho, q = pair.to_physical(rows[:, 8], rows[:, 6])
        rows[:, 8], rows[:, 6] = rho, q
    return rows


# ----------------------------------------------------------------- commands


def _position(cfg: RunConfig, pair):
    spec = cfg.spec()
    rep = solve_shock_position(spec, pair, report=True) if not cfg.multi_root else None
    out = dict(cfg.admissibility)
    if rep is not None:
        out["xi_star_dot"] = rep.xi_star
        out["residual"] = rep.residual
    else:
        roots = solve_shock_positions(spec, pair, cfg.multi_root)
        out["roots"] = roots
        if not roots:
            raise HypothesisError("no root of R = P_e on the given partition", stage="admissibility")
        out["xi_star_dot"] = roots[0]
    return out


def cmd_position(cfg, args):
    pair = cfg.pair()
    out = _position(cfg, pair)
    print(_fmt(out["xi_star_dot"]))
    if "roots" in out:
        print("roots: " + " ".join(_fmt(r) for r in out["roots"]))
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        write_json(d / "summary.json", {"command": "position", **out})
        write_csv(d / "criterion.csv", ["z", "R", "Pe"], criterion_table(cfg, pair))
    return 0


def _solver(cfg, pair, pos):
    grids = GridSpec(cfg.n_xi, cfg.n_eta)
    return FreeBoundarySolver(cfg.spec(), pair, grids, xi_star=pos["xi_star_dot"])


def _write_solution(cfg, pair, sol, outdir: Path, summary):
    ph = map_to_physical(sol)
    write_csv(outdir / "supersonic.csv", FIELD_COLUMNS, field_rows(ph, False, pair, cfg.normalize))
    write_csv(outdir / "subsonic.csv", FIELD_COLUMNS, field_rows(ph, True, pair, cfg.normalize))
    fr = ph.front
    write_csv(
        outdir / "front.csv",
        FRONT_COLUMNS,
        np.column_stack([fr["eta"], fr["psi"], fr["psi_prime"], fr["z"], fr["r"]]),
    )
    write_csv(outdir / "criterion.csv", ["z", "R", "Pe"], criterion_table(cfg, pair))
    if sol.history:
        write_csv(
            outdir / "history.csv",
            HISTORY_COLUMNS,
            [[h[c] for c in HISTORY_COLUMNS] for h in sol.history],
        )
    summary["mapping"] = {
        "eta_roundtrip": ph.eta_roundtrip_error(),
        "mass_flux_deviation": float(np.max(np.abs(ph.axial_mass_flux() - 1.0))),
        "wall_deviation": ph.wall_deviation(),
    }
    write_json(outdir / "summary.json", summary)


def _summary(cmd, cfg, pos, sol):
    sig = cfg.sigma
    xs = float(sol.front.psi_values[-1])
    norms = state_norm(sol.state, sol.grid)
    return {
        "command": cmd,
        **pos,
        "anchor": sol.anchor,
        "xi_star": xs,
        "C_s": sol.C_s,
        "C_s_admissibility": abs(xs - pos["xi_star_dot"]) / sig if sig > 0 else 0.0,
        "perturbation_sup": norms["sup"],
        "residuals": sol.residuals,
        "history": sol.history,
        "sigma": sig,
        "grid": {"n_xi": cfg.n_xi, "n_eta": cfg.n_eta},
        "normalized_output": cfg.normalize,
        "scale": cfg.pair().scale,
    }


def _gate(cfg, outdir):
    if not cfg.admissibility["admissible"]:
        outdir.mkdir(parents=True, exist_ok=True)
        write_json(outdir / "summary.json", {"command": "gate", **cfg.admissibility})
        a = cfg.admissibility
        raise InadmissibleExitPressure(a["R_low"], a["Pe"], a["R_high"])


def cmd_linear(cfg, args):
    outdir = Path(args.out or cfg.out)
    _gate(cfg, outdir)
    pair = cfg.pair()
    pos = _position(cfg, pair)
    solver = _solver(cfg, pair, pos)
    ia = solver.initial_approximation()
    sol = solver.linear_solution(ia)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_solution(cfg, pair, sol, outdir, _summary("linear", cfg, pos, sol))
    print(f"xi_star_dot = {_fmt(ia.xi_star_dot)}  defect = {ia.defect:.3e}")
    return 0


def cmd_solve(cfg, args):
    outdir = Path(args.out or cfg.out)
    _gate(cfg, outdir)
    pair = cfg.pair()
    pos = _position(cfg, pair)
    solver = _solver(cfg, pair, pos)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        sol = solver.run_fixed_point(tol=cfg.tol, max_iter=cfg.max_iter)
    except NonconvergenceError as exc:
        write_json(outdir / "summary.json", {"command": "solve", **pos, "error": str(exc), "history": exc.history})
        raise
    summary = _summary("solve", cfg, pos, sol)
    _write_solution(cfg, pair, sol, outdir, summary)
    r = sol.residuals
    print(
        f"xi_star_dot = {_fmt(pos['xi_star_dot'])}  xi_star = {_fmt(summary['xi_star'])}  "
        f"iterations = {r['iterations']}  G_sup = {r['G_sup']:.3e}"
    )
    return 0


def cmd_check(cfg, args):
    """Self-consistency checks on the configured case; nonzero exit if any fails."""
    pair = cfg.pair()
    gas = cfg.gas
    lin = linearized_coefficients(gas, pair)
    checks = {}
    rh = rh_residual_normal(pair.upstream, pair.downstream, gas)
    checks["rankine_hugoniot"] = max(abs(float(x)) for x in rh)
    checks["det_A_s"] = abs(np.linalg.det(lin.A_s) - lin.det_A_s) / abs(lin.det_A_s)
    ok = checks["rankine_hugoniot"] < 1e-10 and checks["det_A_s"] < 1e-10
    if cfg.admissibility["admissible"]:
        pos = _position(cfg, pair)
        solver = FreeBoundarySolver(
            cfg.spec(), pair, GridSpec(min(cfg.n_xi, 33), min(cfg.n_eta, 33)), xi_star=pos["xi_star_dot"]
        )
        sol = solver.run_fixed_point(tol=cfg.tol, max_iter=cfg.max_iter)
        checks["G_sup"] = sol.residuals["G_sup"]
        checks["axis"] = sol.residuals["axis"]
        ph = map_to_physical(sol)
        checks["eta_roundtrip"] = ph.eta_roundtrip_error()
        ok = ok and checks["G_sup"] < 1e-8 and checks["axis"] == 0.0 and checks["eta_roundtrip"] < 1e-8
    for k, v in checks.items():
        print(f"{k:20s} {v:.3e}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


# ----------------------------------------------------------------- entry


def _apply_flags(cfg: RunConfig, args):
    if args.max_iter is not None:
        cfg.max_iter = args.max_iter
    if args.tol is not None:
        cfg.tol = args.tol
    if args.grid:
        try:
            a, b = args.grid.lower().split("x")
            cfg.n_xi, cfg.n_eta = int(a), int(b)
        except ValueError as exc:
            raise HypothesisError(f"--grid expects NxM, got {args.grid!r}") from exc
    if args.no_normalize:
        cfg.normalize = False
    if args.multi_root:
        cfg.multi_root = [float(x) for x in args.multi_root.split(",")]
    return validate(cfg)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--position-only", action="store_true", help="only solve for the shock position")
    common.add_argument("--max-iter", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--grid", help="node counts NxM (xi by eta)")
    common.add_argument("--no-normalize", action="store_true", help="write densities and speeds in input units")
    common.add_argument("--multi-root", help="comma-separated partition points for root enumeration")
    p = argparse.ArgumentParser(prog="axishock", description="Transonic shock in an axisymmetric nozzle")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in [
        ("position", "admissibility check and shock position"),
        ("linear", "initial approximation"),
        ("solve", "full free-boundary iteration"),
        ("check", "self-consistency checks"),
    ]:
        sub.add_parser(name, parents=[common], help=hlp)
    return p


COMMANDS = {"position": cmd_position, "linear": cmd_linear, "solve": cmd_solve, "check": cmd_check}


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get(LOG_ENV, "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config, check=False), args)
        cmd = "position" if args.position_only else args.command
        return COMMANDS[cmd](cfg, args)
    except AxishockError as exc:
        stage = exc.stage or "run"
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
