"""Command line entry point: ``swtorus {verify,solve,lift,pair,convergence}``.

Exit status: 0 success, 1 a check failed, 2 bad configuration or input.
Reports are JSON with sorted keys and no timestamps, so equal inputs give
equal bytes.
"""

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import convergence as conv_mod
from . import lattice as L
from . import solver as V
from . import sw_ops as S
from . import symplectic as Y
from . import verify as Vf

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    sizes: tuple = (8, 8, 8, 8)
    lengths: tuple = (1.0, 1.0, 1.0, 1.0)
    conformal: str = "flat"
    wedge_sign: int = -1
    twist_signs: tuple = (-1, 1)
    metric_sign: int = 1
    p: tuple = (0, 0)
    q: tuple = (0, 0)
    seed: int = 20240601
    scheme: str = "link"
    convention: str = "paper"
    out: str = "swtorus-out"
    workers: int = 1
    max_steps: int = 100_000
    step_size: float = 1e-2
    tol: float = 1e-6
    report_every: int = 100
    sizes_ladder: tuple = (4, 8, 16)

    def conventions(self):
        return Y.FormConventions(wedge_sign=self.wedge_sign, twist_signs=tuple(self.twist_signs),
                                 metric_sign=self.metric_sign)

    def verify_config(self):
        return Vf.VerifyConfig(sizes=tuple(self.sizes), lengths=tuple(self.lengths),
                               conformal=self.conformal, seed=self.seed, scheme=self.scheme,
                               convention=self.convention, p=tuple(self.p), q=tuple(self.q),
                               conventions=self.conventions())

    def settings(self):
        return V.SolveSettings(max_steps=self.max_steps, step_size=self.step_size, tol=self.tol,
                               scheme=self.scheme, convention=self.convention,
                               report_every=self.report_every)

    def grid(self):
        return L.Grid4(tuple(self.sizes), tuple(self.lengths))

    def validate(self):
        try:
            self.verify_config()
            self.settings()
            if self.workers < 1:
                raise ValueError("workers must be >= 1")
            if len(self.sizes_ladder) < 2 or any(n < 4 for n in self.sizes_ladder):
                raise ValueError("convergence sizes need at least two entries, each >= 4")
        except (ValueError, TypeError) as err:
            raise ConfigError(str(err)) from None
        return self

    def as_dict(self):
        """Effective configuration for reports.  ``workers`` and ``out`` are left
        out: they change scheduling and location, never results."""
        d = asdict(self)
        d.pop("workers")
        d.pop("out")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


# key -> (section, parser)
def _ints(text):
    return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)


def _floats(text):
    return tuple(float(t) for t in str(text).replace(" ", "").split(",") if t)


def _sign(text):
    value = int(text)
    if value not in (-1, 1):
        raise ValueError(f"sign must be -1 or 1, got {text}")
    return value


_KEYS = {
    "sizes": ("grid", _ints),
    "lengths": ("grid", _floats),
    "conformal": ("forms", str),
    "wedge_sign": ("forms", _sign),
    "twist_signs": ("forms", _ints),
    "metric_sign": ("forms", _sign),
    "p": ("forms", _ints),
    "q": ("forms", _ints),
    "max_steps": ("solver", int),
    "step_size": ("solver", float),
    "tol": ("solver", float),
    "report_every": ("solver", int),
    "seed": ("run", int),
    "scheme": ("run", str),
    "convention": ("run", str),
    "out": ("run", str),
    "workers": ("run", int),
    "sizes_ladder": ("run", _ints),
}


def load_config(path=None, overrides=None):
    """Defaults, then the config file, then explicit overrides (flags)."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        known = {sec for sec, _ in _KEYS.values()}
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _KEYS or _KEYS[key][0] != section:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                try:
                    values[key] = _KEYS[key][1](raw)
                except ValueError as err:
                    raise ConfigError(f"bad value for {key}: {err}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        cfg = RunConfig(**values)
    except TypeError as err:
        raise ConfigError(str(err)) from None
    return cfg.validate()


# -- output helpers ----------------------------------------------------------

def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _report(command, cfg, **payload):
    body = {
        "tool": "swtorus",
        "version": __version__,
        "command": command,
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "generator": L.GENERATOR,
        "conventions": cfg.conventions().as_dict(),
    }
    body.update(payload)
    return Vf._num(body)


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path, text):
    Path(path).write_text(text)
    return path


# -- commands ----------------------------------------------------------------

def cmd_verify(cfg, suites=None):
    records = Vf.run_all(cfg.verify_config(), workers=cfg.workers, names=suites)
    failed = [r["name"] for r in records if not r["pass"]]
    fitted = {r["name"]: r["fitted_constants"] for r in records if r["fitted_constants"]}
    report = _report("verify", cfg, records=records, fitted_constants=fitted,
                     summary={"total": len(records), "passed": len(records) - len(failed),
                              "failed": failed},
                     all_pass=not failed)
    path = _write(_outdir(cfg) / "verify_report.json", _dump(report))
    for r in records:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']:40s} "
              f"defect={r['max_defect']!s:24s} tol={r['tolerance']:g}")
    print(f"{len(records) - len(failed)}/{len(records)} invariants pass; report {path}")
    return EXIT_OK if not failed else EXIT_FAIL


def _read_pair(gauge_path, spinor_path, ndim):
    kind_g, gauge = L.read_swf(gauge_path, ndim)
    kind_s, spinor = L.read_swf(spinor_path, ndim)
    if kind_g != L.GAUGE or kind_s != L.SPINOR:
        raise L.SnapshotError("expected a gauge snapshot and a spinor snapshot")
    return gauge, spinor


def _reduced_from(gauge, spinor, grid2):
    if spinor.shape != tuple(grid2.shape) + (4,):
        raise L.SnapshotError(f"snapshot shape {spinor.shape[:-1]} does not match grid {grid2.shape}")
    return S.ReducedConfig(grid2, gauge[:2].copy(), gauge[2:].copy(), spinor.copy())


def cmd_solve(cfg, gauge_in=None, spinor_in=None):
    """Reduced solve on the (x0, x1) factor, started from seeded small data or snapshots."""
    grid4 = cfg.grid()
    g2 = grid4.factor1()
    transverse = tuple(grid4.spacing[2:]) if cfg.scheme == "link" else None
    if gauge_in or spinor_in:
        if not (gauge_in and spinor_in):
            raise L.SnapshotError("--gauge and --spinor must be given together")
        start = _reduced_from(*_read_pair(gauge_in, spinor_in, 2), g2)
    else:
        rng = Vf.stream(cfg.seed, "solve")
        f = lambda amp: L.random_smooth_field(g2, rng, 6) * amp
        start = S.ReducedConfig(g2, np.stack([f(0.05), f(0.05)]), np.stack([f(0.05), f(0.05)]),
                                np.stack([f(0.01) for _ in range(4)], axis=-1))
    settings = cfg.settings()
    sol, trace = V.solve_reduced(start, settings, transverse)
    out = _outdir(cfg)
    _write(out / "solve_trace.csv", trace.to_csv())
    L.write_swf(out / "solve_gauge.swf", L.GAUGE, sol.gauge_array())
    L.write_swf(out / "solve_spinor.swf", L.SPINOR, sol.u)
    residual = math.sqrt(V.reduced_energy(sol, settings, transverse) / g2.volume)
    summary = _report("solve", cfg, steps=trace.steps, converged=trace.converged,
                      stalled=trace.stalled, residual=residual, transverse=transverse)
    _write(out / "solve_summary.json", _dump(summary))
    print(f"steps={trace.steps} converged={trace.converged} residual={residual:.3e}")
    return EXIT_OK


def cmd_lift(cfg, gauge_in, spinor_in):
    grid4 = cfg.grid()
    g2 = grid4.factor1()
    c = _reduced_from(*_read_pair(gauge_in, spinor_in, 2), g2)
    transverse = tuple(grid4.spacing[2:]) if cfg.scheme == "link" else None
    settings = cfg.settings()
    A, u = c.lift(grid4)
    r2 = math.sqrt(V.reduced_energy(c, settings, transverse) / g2.volume)
    r4 = V.residual_rms(A, u, grid4, settings)
    r4c, r4d = S.full_residual(A, u, grid4, cfg.scheme, cfg.convention)
    r2c, r2d = S.reduced_residual(c, cfg.scheme, cfg.convention, transverse)
    pointwise = max(float(np.max(np.abs(r4c - L.lift1(r2c, grid4)))),
                    float(np.max(np.abs(r4d - L.lift1(r2d, grid4, lead=1)))))
    match = pointwise == 0.0 and abs(r4 - r2) <= 1e-12 * max(r2, 1e-300)
    out = _outdir(cfg)
    L.write_swf(out / "lift_gauge.swf", L.GAUGE, A)
    L.write_swf(out / "lift_spinor.swf", L.SPINOR, u)
    _write(out / "lift_report.json", _dump(_report(
        "lift", cfg, residual_2d=r2, residual_4d=r4, pointwise_defect=pointwise, match=match)))
    print(f"residual_2d={r2!r} residual_4d={r4!r} match={match}")
    return EXIT_OK if match else EXIT_FAIL


def _tangent_from(paths, grid):
    form, zeta = _read_pair(*paths, 4)
    if zeta.shape != tuple(grid.shape) + (4,):
        raise L.SnapshotError(f"tangent snapshot {zeta.shape[:-1]} does not match grid {grid.shape}")
    return S.Tangent(form, zeta)


def cmd_pair(cfg, a_paths, b_paths):
    grid = cfg.grid()
    vc = cfg.verify_config()
    k = Vf.conformal_factors(grid, cfg.conformal)
    conv = cfg.conventions()
    a, b = _tangent_from(a_paths, grid), _tangent_from(b_paths, grid)
    p, q = tuple(cfg.p), tuple(cfg.q)
    g1, g2 = grid.factor1(), grid.factor2()
    values = {
        "omega": Y.omega(a, b, grid, k, conv),
        "omega_terms": Y.omega_terms(a, b, grid, k, conv),
        "omega_y": Y.omega_y(a, b, p, q, grid, k, conv),
        "omega_y_terms": Y.omega_y_terms(a, b, p, q, grid, k, conv),
        "omega1_psi1": Y.omega1_sigma(Y.pushforward_psi1(a, p), Y.pushforward_psi1(b, p),
                                      g1, k.f1, conv),
        "omega1_psi2": Y.omega1_sigma(Y.pushforward_psi2(a, q), Y.pushforward_psi2(b, q),
                                      g2, k.f2, conv),
        "pullback_sum": Y.pullback_sum(a, b, p, q, grid, k, conv),
    }
    fits = Vf.run_all(vc, workers=cfg.workers, names=["slice_identity", "moment_identity"])
    fitted = {"kappa": fits[0]["fitted_constants"]["kappa"],
              "kappa_m": fits[1]["fitted_constants"]["kappa_m"]}
    _write(_outdir(cfg) / "pair_report.json", _dump(_report(
        "pair", cfg, pairings=values, fitted_constants=fitted,
        fit_records=fits)))
    print(json.dumps(Vf._num({"pairings": {k_: v for k_, v in values.items()
                                           if not isinstance(v, dict)},
                              "fitted_constants": fitted}), sort_keys=True))
    return EXIT_OK


def cmd_convergence(cfg, constant=False):
    sizes = tuple(cfg.sizes_ladder)
    rows, orders = conv_mod.convergence_table(sizes, constant=constant)
    out = _outdir(cfg)
    keys = ("dirac_link", "dirac_central", "curvature_midpoint")
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "h") + keys)
        for r in rows:
            w.writerow([r["n"], repr(r["h"])] + [repr(r[key]) for key in keys])
    with open(out / "convergence_orders.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("operator", "nominal", "fitted", "pairwise"))
        for key in keys:
            pair = " ".join(repr(x) for x in orders[key]["pairwise"])
            w.writerow([key, repr(conv_mod.NOMINAL_ORDER[key]), repr(orders[key]["fitted"]), pair])
    for key in keys:
        print(f"{key:20s} fitted order {orders[key]['fitted']:.3f} "
              f"(nominal {conv_mod.NOMINAL_ORDER[key]:g})")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def _common(p):
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--grid", type=_ints, metavar="N0,N1,N2,N3")
    p.add_argument("--scheme", choices=S.SCHEMES)
    p.add_argument("--convention", choices=S.CONVENTIONS)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--workers", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="swtorus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"swtorus {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the seeded property suites")
    _common(p)
    p.add_argument("--wedge-sign", type=int, choices=(-1, 1),
                   help="override the wedge sign of the convention ledger")
    p.add_argument("--suites", help="comma separated subset of " + ",".join(Vf.SUITES))

    p = sub.add_parser("solve", help="reduced gradient-flow solve on the (x0, x1) surface")
    _common(p)
    p.add_argument("--gauge", help="2D gauge snapshot (a0, a1, phi1, phi2) to start from")
    p.add_argument("--spinor", help="2D spinor snapshot to start from")

    p = sub.add_parser("lift", help="lift a 2D snapshot to 4D and compare residuals")
    _common(p)
    p.add_argument("--gauge", required=True)
    p.add_argument("--spinor", required=True)

    p = sub.add_parser("pair", help="evaluate the 2-forms on two tangent snapshots")
    _common(p)
    p.add_argument("--a", nargs=2, required=True, metavar=("FORM", "SPINOR"))
    p.add_argument("--b", nargs=2, required=True, metavar=("FORM", "SPINOR"))

    p = sub.add_parser("convergence", help="operator errors against grid size")
    _common(p)
    p.add_argument("--sizes", type=_ints, metavar="N,N,...")
    p.add_argument("--constant", action="store_true", help="use constant fields")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "sizes": args.grid, "scheme": args.scheme,
                 "convention": args.convention, "out": args.out, "workers": args.workers,
                 "wedge_sign": getattr(args, "wedge_sign", None),
                 "sizes_ladder": getattr(args, "sizes", None)}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "verify":
            suites = args.suites.split(",") if args.suites else None
            if suites and any(s not in Vf.SUITES for s in suites):
                raise ConfigError(f"unknown suite in {args.suites!r}")
            return cmd_verify(cfg, suites)
        if args.command == "solve":
            return cmd_solve(cfg, args.gauge, args.spinor)
        if args.command == "lift":
            return cmd_lift(cfg, args.gauge, args.spinor)
        if args.command == "pair":
            return cmd_pair(cfg, args.a, args.b)
        return cmd_convergence(cfg, args.constant)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (L.SnapshotError, OSError, ValueError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
