"""Command-line front end.

    besselgrushin verify {basis,kernels,plancherel,weighted,cz,bounds,sobolev,lemma-p5}
    besselgrushin apply {multiplier,heat,riesz}
    besselgrushin kernel {heat,riesz}

Every run reads one flat JSON config (``--config``), writes its outputs and a
``summary.json`` into ``--out`` and exits with 0 (all reports pass), 1 (some
report failed), 2 (configuration error) or 3 (numeric failure).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import estimates as E
from . import kernels as K
from .laguerre_basis import ConfigError, ProblemConfig, basis_matrix, basis_scheme
from .operators import (
    DomainError,
    Grid,
    GridFunction,
    SpectralSymbol,
    apply_multiplier,
    multiplier_kernel,
    riesz_product_space,
    symbol_from_dict,
)
from .reports import BoundReport, reports_to_csv, to_jsonable
from .specfun import NumericError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

VERIFY = ("basis", "kernels", "plancherel", "weighted", "cz", "bounds", "sobolev", "lemma-p5")
APPLY = ("multiplier", "heat", "riesz")
KERNEL = ("heat", "riesz")

DEFAULT_SYMBOLS = (
    {"name": "smooth_indicator", "A": 1.0, "B": 4.0},
    {"name": "smooth_indicator", "A": 0.5, "B": 2.0},
    {"name": "smooth_indicator", "A": 1.0, "B": 3.0, "delta": 0.25},
)


class RunConfig:
    """Validated view of the flat JSON document plus CLI overrides."""

    def __init__(self, raw: dict, grid_level: int = 0):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = dict(raw)
        self.grid_level = int(grid_level)
        if self.grid_level not in (0, 1, 2):
            raise ConfigError("--grid-level must be 0, 1 or 2")
        m = int(raw.get("m", 1))
        self.problem = ProblemConfig(m, int(raw.get("n", 1)), tuple(raw.get("alpha", [0.5] * m)))
        base = Grid.default(m)
        try:
            self.grid = Grid(
                m=m,
                L=float(raw.get("L", base.L)),
                N_y=int(raw.get("N_y", base.N_y)),
                X_max=float(raw.get("X_max", base.X_max)),
                N=int(raw.get("N", base.N)),
                panel_width=float(raw.get("panel_width", base.panel_width)),
                nodes_per_panel=int(raw.get("nodes_per_panel", base.nodes_per_panel)),
            ).refined(self.grid_level)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def effective(self) -> dict:
        return {
            **self.raw,
            "m": self.problem.m,
            "n": self.problem.n,
            "alpha": list(self.problem.alpha),
            "grid": self.grid.as_dict(),
            "grid_level": self.grid_level,
        }


def _levels(cfg: RunConfig, count: int):
    return tuple(range(cfg.grid_level, cfg.grid_level + count))


# ------------------------------------------------------------ verify suites


def _verify_basis(cfg: RunConfig):
    kmax = int(cfg.get("K", 40))
    betas = cfg.get("betas", sorted(set(cfg.problem.alpha)))
    out = []
    for beta in betas:
        x, w = basis_scheme(kmax, beta).rule()
        B = basis_matrix(kmax, beta, 1.0, x)
        err = float(np.max(np.abs((B * w) @ B.T - np.eye(kmax + 1))))
        out.append(BoundReport("gram_matrix", {"beta": beta, "K": kmax}, f"{x.size} Gauss nodes", (err,),
                               passed=err < 1e-8))
    return out


def _verify_kernels(cfg: RunConfig):
    kc = K.KernelCheckConfig(epsilon=float(cfg.get("epsilon", 0.25)), c=float(cfg.get("c", 1 / 16)),
                             beta=float(cfg.get("beta", cfg.problem.alpha[0])))
    lv = _levels(cfg, 2)
    return K.lemma_w_reports(kc, levels=lv) + K.lemma_g_reports(kc, levels=lv)


def _symbols(cfg):
    return [symbol_from_dict(s) for s in cfg.get("symbols", DEFAULT_SYMBOLS)]


def _verify_plancherel(cfg: RunConfig):
    N = int(cfg.get("kernel_N", 16))
    ys = cfg.get("y_samples", [0.5, 1.0, 2.0])
    lv = _levels(cfg, 3)
    return [E.plancherel_check(H, y, cfg.problem, N=N, levels=lv) for H in _symbols(cfg) for y in ys]


def _verify_weighted(cfg: RunConfig):
    out = []
    ys = np.geomspace(1e-2, 1e2, int(cfg.get("y_count", 41)))
    base = cfg.get("symbol", {"name": "smooth_indicator", "A": 1.0, "B": 4.0})
    for gamma in cfg.get("gammas", [0.0, 0.25, 0.45]):
        for R in cfg.get("R_values", [1.0, 2.0, 4.0, 8.0]):
            h = symbol_from_dict(base)
            A, B = h.support
            if abs(B / A - 4.0) > 1e-12:
                raise ConfigError("weighted suite expects a base symbol supported on [A, 4A]")
            H = SpectralSymbol(lambda w, h=h, s=R * R / A: h(w / s), (R * R, 4 * R * R), name=h.name,
                               params={**h.params, "R": R})
            N0 = int(cfg.get("kernel_N", 24)) * 2**cfg.grid_level
            out.extend(E.weighted_plancherel_report(H, gamma, ys, cfg.problem, N_levels=(N0, 2 * N0), R=R))
    return out


def _verify_cz(cfg: RunConfig):
    return E.cz_bound_report(cfg.problem, tuple(cfg.get("a_samples", [0.5, 1.0, 2.0, 4.0])), _levels(cfg, 2))


def _verify_bounds(cfg: RunConfig):
    out = E.basis_bound_report(cfg.problem, K=int(cfg.get("K", 200)))
    if cfg.problem.m == 1:
        ts = np.geomspace(0.05, 5.0, int(cfg.get("t_count", 7)))
        out.append(E.heat_l2_gaussian_report(ts, cfg.get("x_samples", [0.25, 1.0, 4.0]), cfg.problem,
                                             levels=_levels(cfg, 2)))
        r_samples = cfg.get("r_samples", [0.25, 0.5, 1.0, 2.0])
        for t in cfg.get("offball_t", [0.2, 1.0]):
            out.append(E.heat_offball_report(float(t), r_samples, float(cfg.get("x1", 1.0)), cfg.problem,
                                             c=float(cfg.get("c", 0.125)), levels=_levels(cfg, 2)))
    return out


def _verify_sobolev(cfg: RunConfig):
    s = float(cfg.get("s", 1.0))
    out = []
    for sym in cfg.get("symbols", [{"name": "constant", "value": 1.0}, {"name": "imaginary_power", "tau": 1.0}]):
        M = symbol_from_dict(sym)
        vals = []
        for lv in _levels(cfg, 2):
            spec = E.SobolevSpec(s=s, npts=4096 * 2**lv)
            vals.append(E.local_sobolev_norm(M, spec))
        out.append(BoundReport("local_sobolev_norm", {"symbol": M.name, **M.params, "s": s}, "log t-grid",
                               tuple(vals)))
    return out


def _verify_lemma_p5(cfg: RunConfig):
    tests = E.p5_test_set(cfg.problem)
    return [E.lemma_p5_ratio(g, tests, cfg.problem, levels=_levels(cfg, 2))
            for g in cfg.get("gammas", [0.25, 0.5, 1.0])]


SUITES = {
    "basis": _verify_basis,
    "kernels": _verify_kernels,
    "plancherel": _verify_plancherel,
    "weighted": _verify_weighted,
    "cz": _verify_cz,
    "bounds": _verify_bounds,
    "sobolev": _verify_sobolev,
    "lemma-p5": _verify_lemma_p5,
}


# --------------------------------------------------------------- apply/kernel


def _apply(which: str, cfg: RunConfig, out_dir: Path):
    src = cfg.get("input")
    if not src:
        raise ConfigError("apply needs an 'input' GridFunction CSV path")
    f = GridFunction.read(src)
    if f.config.alpha != cfg.problem.alpha or f.config.m != cfg.problem.m:
        raise ConfigError(f"input alpha {f.config.alpha} does not match config alpha {cfg.problem.alpha}")
    N = int(cfg.get("N", f.grid.N))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if which == "multiplier":
            g = apply_multiplier(symbol_from_dict(cfg.get("symbol", {"name": "constant", "value": 1.0})), f, N)
        elif which == "heat":
            g = apply_multiplier(SpectralSymbol.heat(float(cfg.get("t", 1.0))), f, N)
        else:
            g = riesz_product_space(int(cfg.get("axis", 0)), f, N)
    g.write(out_dir / "output.csv")
    return [], {"tail": g.info, "warnings": [str(w.message) for w in caught]}


def _read_points(cfg, m):
    pts = cfg.get("points")
    if not pts:
        raise ConfigError("kernel tabulation needs a 'points' list of [x, y] pairs")
    return pts


def _kernel(which: str, cfg: RunConfig, out_dir: Path):
    m = cfg.problem.m
    pts = _read_points(cfg, m)
    rows = []
    if which == "heat":
        t = float(cfg.get("t", 1.0))
        a = float(cfg.get("a", 1.0))
        for x, y in pts:
            x, y = np.atleast_1d(x), np.atleast_1d(y)
            rows.append(list(x) + list(y) + [float(K.multi_heat_kernel_scaled(t, cfg.problem, a, x, y))])
    else:
        a = float(cfg.get("a", 1.0))
        j = int(cfg.get("axis", 0))
        for x, y in pts:
            x, y = np.atleast_1d(x), np.atleast_1d(y)
            rows.append(list(x) + list(y) + [float(K.riesz_kernel_laguerre(cfg.problem, a, x, y, j))])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(m)] + [f"y{i + 1}" for i in range(m)] + ["value"])
    for r in rows:
        w.writerow([f"{v:.17g}" for v in r])
    (out_dir / "kernel.csv").write_text(buf.getvalue())
    return [], {"rows": len(rows)}


# ------------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="besselgrushin", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, choices in (("verify", VERIFY), ("apply", APPLY), ("kernel", KERNEL)):
        sp = sub.add_parser(name)
        sp.add_argument("target", choices=choices)
        sp.add_argument("--config", type=Path, default=None, help="flat JSON config file")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--grid-level", type=int, default=0, choices=(0, 1, 2), help="refinement multiplier")
        sp.add_argument("--quiet", action="store_true")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else (lambda *a: print(*a))
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        cfg = RunConfig(raw, args.grid_level)
    except (OSError, json.JSONDecodeError, ConfigError, DomainError, ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    extra = {}
    try:
        if args.command == "verify":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                reports = SUITES[args.target](cfg)
        elif args.command == "apply":
            reports, extra = _apply(args.target, cfg, out_dir)
        else:
            reports, extra = _kernel(args.target, cfg, out_dir)
    except (ConfigError, DomainError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError, K.DiagonalError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok = all(r.ok for r in reports)
    if reports:
        (out_dir / "report.csv").write_text(reports_to_csv(reports))
        if any(not math.isfinite(r.empirical_C) for r in reports):
            ok = False
    summary = {
        "command": [args.command, args.target],
        "config": cfg.effective(),
        "reports": [r.as_dict() for r in reports],
        "pass": ok,
        **({"details": extra} if extra else {}),
    }
    (out_dir / "summary.json").write_text(json.dumps(to_jsonable(summary), indent=2, sort_keys=True))
    for r in reports:
        say(r.line())
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
