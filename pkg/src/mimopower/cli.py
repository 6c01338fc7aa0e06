"""Command-line front end.

Subcommands:
  solve      one instance, one scheme, printed allocation and SE report
  campaign   Monte Carlo campaign; per-drop CSV, per-metric CDF CSVs, and a
             plot-description file
  verify     independent-oracle suites (grid equivalence, tangent-bound
             sampling, training-length sweep, estimator moments)
  sweep-tau  utility vs training length for one instance

Configuration comes from an optional `key = value` file ('#' comments) with
CLI flags taking precedence.  Defaults reproduce the reference scenario:
M=100, K=10, T=200, R=500 m, 100 m minimum distance, path-loss exponent
3.76, -10 dB cell-edge SNR, 1000 drops.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .backend import BACKEND_NAME
from .gp import GpSolverError, GpSolverOptions
from .maxmin import DATA_ONLY, JOINT, solve_maxmin, sweep_tau
from .model import (
    LargeScaleFading,
    ModelError,
    SystemConfig,
    energy_slack,
    equal_power_allocation,
    se_report,
)
from .oracle import GridSpec, grid_search, validate_estimator
from .sim import (
    ALL_SCHEMES,
    MAXMIN_DATA,
    MAXMIN_JOINT,
    NO_CONTROL,
    SUM_DATA,
    SUM_JOINT,
    CampaignError,
    DropConfig,
    compute_emax,
    drop_users,
    empirical_cdf,
    run_campaign,
)
from .sumse import sca_solve


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    m: int = 100
    k: int = 10
    t: int = 200
    cell_radius: float = 500.0
    min_distance: float = 100.0
    pathloss_exponent: float = 3.76
    edge_snr_db: float = -10.0
    drops: int = 1000
    seed: int = 1
    workers: int = 1
    schemes: tuple[str, ...] = ALL_SCHEMES
    out: str = "out"
    mode: str = JOINT

    def system_config(self, tau_p: int | None = None) -> SystemConfig:
        return SystemConfig(
            M=self.m, K=self.k, T=self.t,
            tau_p=self.k if tau_p is None else tau_p,
            E_max=compute_emax(self.drop_config(), self.t),
        )

    def drop_config(self) -> DropConfig:
        return DropConfig(
            cell_radius=self.cell_radius,
            min_distance=self.min_distance,
            pathloss_exponent=self.pathloss_exponent,
            num_drops=self.drops,
            seed=self.seed,
            edge_snr_linear=10.0 ** (self.edge_snr_db / 10.0),
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "schemes":
                v = ",".join(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    if key in ("m", "k", "t", "drops", "seed", "workers"):
        return int(raw)
    if key in ("cell_radius", "min_distance", "pathloss_exponent", "edge_snr_db"):
        return float(raw)
    if key == "schemes":
        schemes = tuple(s.strip() for s in raw.split(",") if s.strip())
        for s in schemes:
            if s not in ALL_SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(ALL_SCHEMES)}")
        return schemes
    if key == "mode":
        if raw not in (JOINT, DATA_ONLY):
            raise ConfigError(f"mode must be {JOINT} or {DATA_ONLY}, got {raw!r}")
        return raw
    return raw  # out


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse `key = value` lines, then apply overrides; validates everything."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown option {key!r}")
        values[key] = _parse_value(key, str(val)) if isinstance(val, str) else val
    cfg = RunConfig(**values)
    try:
        cfg.system_config()
        cfg.drop_config()
    except (ModelError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _load_run_config(args) -> RunConfig:
    text = ""
    if args.config:
        text = Path(args.config).read_text()
    overrides = {}
    for key in ("seed", "drops", "out", "mode", "workers"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "schemes", None):
        overrides["schemes"] = args.schemes
    return parse_config(text, overrides)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _solve_scheme(scheme: str, fading, cfg):
    if scheme == NO_CONTROL:
        return equal_power_allocation(cfg), {}
    if scheme in (MAXMIN_JOINT, MAXMIN_DATA):
        sol = solve_maxmin(fading, cfg, JOINT if scheme == MAXMIN_JOINT else DATA_ONLY)
        return sol.alloc, {"gp_iterations": sol.gp_iterations}
    sol = sca_solve(fading, cfg, JOINT if scheme == SUM_JOINT else DATA_ONLY)
    return sol.alloc, {"sca_iterations": sol.sca_iterations, "status": sol.status}


def cmd_solve(args) -> int:
    run = _load_run_config(args)
    if args.beta:
        try:
            beta = [float(b) for b in args.beta.split(",")]
        except ValueError:
            print("error: --beta must be a comma-separated list of numbers", file=sys.stderr)
            return 2
    elif args.beta_file:
        beta = [float(line) for line in Path(args.beta_file).read_text().split()]
    else:
        rng = np.random.default_rng(run.seed)
        fading, _ = drop_users(rng, run.drop_config(), run.k)
        beta = list(fading.beta)
    try:
        fading = LargeScaleFading(beta=np.asarray(beta))
        run = replace(run, k=fading.K)
        cfg = run.system_config()
        alloc, diag = _solve_scheme(args.scheme, fading, cfg)
    except (ModelError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GpSolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    report = se_report(alloc, fading, cfg)
    slack = energy_slack(alloc, cfg)
    print(f"scheme {args.scheme}  M={cfg.M} K={cfg.K} T={cfg.T} tau_p={cfg.tau_p} "
          f"E_max={cfg.E_max:g}  backend={BACKEND_NAME}")
    print(f"{'user':>4} {'beta':>12} {'p_p':>12} {'p_u':>12} {'sinr':>12} "
          f"{'se':>8} {'slack':>10}")
    for i in range(cfg.K):
        print(f"{i:>4} {fading.beta[i]:>12.5g} {alloc.p_p[i]:>12.6g} {alloc.p_u[i]:>12.6g} "
              f"{report.sinr[i]:>12.6g} {report.se[i]:>8.4f} {slack[i]:>10.2e}")
    print(f"sum SE = {report.sum_se:.4f} bit/s/Hz, min SE = {report.min_se:.4f} bit/s/Hz")
    for key, val in diag.items():
        print(f"{key} = {val}")
    if args.out_csv:
        rows = [
            [i, _fmt(fading.beta[i]), _fmt(alloc.p_p[i]), _fmt(alloc.p_u[i]),
             _fmt(report.sinr[i]), _fmt(report.se[i])]
            for i in range(cfg.K)
        ]
        _write_csv(Path(args.out_csv), ["user", "beta", "p_p", "p_u", "sinr", "se"], rows)
    return 0


_PLOT_DESCRIPTION = """\
Figure 1: CDF of the sum SE
  x axis: sum SE (bit/s/Hz); y axis: empirical CDF
  series: one per scheme, from cdf_sum_se_<scheme>.csv

Figure 2: CDF of the minimum SE
  x axis: minimum SE over users (bit/s/Hz); y axis: empirical CDF
  series: one per scheme, from cdf_min_se_<scheme>.csv

Figure 3: CDF of the per-user SE
  x axis: per-user SE (bit/s/Hz); y axis: empirical CDF
  series: one per scheme, from cdf_per_user_se_<scheme>.csv
"""


def write_campaign_outputs(results, run: RunConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for res in results:
        for rec in res.records:
            for u in range(len(rec.se)):
                rows.append([
                    rec.drop, res.scheme, u, _fmt(rec.se[u]), _fmt(rec.sum_se),
                    _fmt(rec.min_se), _fmt(rec.sinr[u]), _fmt(rec.p_p[u]), _fmt(rec.p_u[u]),
                ])
    _write_csv(out_dir / "drops.csv",
               ["drop", "scheme", "user", "se", "sum_se", "min_se", "sinr", "p_p", "p_u"],
               rows)

    for res in results:
        metrics = {
            "sum_se": [rec.sum_se for rec in res.records],
            "min_se": [rec.min_se for rec in res.records],
            "per_user_se": [v for rec in res.records for v in rec.se],
        }
        for name, values in metrics.items():
            cdf = empirical_cdf(values)
            n = cdf.values.size
            _write_csv(
                out_dir / f"cdf_{name}_{res.scheme}.csv",
                ["value", "cdf"],
                [[_fmt(v), _fmt((i + 1) / n)] for i, v in enumerate(cdf.values)],
            )
    (out_dir / "plots.txt").write_text(_PLOT_DESCRIPTION)
    (out_dir / "config.txt").write_text(run.to_text())


def cmd_campaign(args) -> int:
    try:
        run = _load_run_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    progress = None
    if not args.quiet:
        def progress(done, total):
            if done % 50 == 0 or done == total:
                print(f"  {done}/{total} drops", file=sys.stderr)
    try:
        results = run_campaign(
            run.drop_config(), run.m, run.k, run.t,
            schemes=run.schemes, workers=run.workers, progress=progress,
        )
    except CampaignError as exc:
        print(f"campaign failed: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(run.out)
    write_campaign_outputs(results, run, out_dir)
    print(f"wrote {out_dir}/drops.csv and per-metric CDF files for "
          f"{len(results)} schemes, {len(results[0].records)} drops")
    for res in results:
        sums = empirical_cdf([rec.sum_se for rec in res.records])
        mins = empirical_cdf([rec.min_se for rec in res.records])
        print(f"  {res.scheme:>15}: 0.95-likely sum SE {sums.likely95:7.3f}, "
              f"median min SE {mins.median:6.3f} bit/s/Hz")
    return 0


def _verify_suites(run: RunConfig, gp_gap_tol: float | None):
    """Yield (name, passed, detail) per suite."""
    from .gp import Posynomial, mono, monomial_approximation, evaluate

    rng = np.random.default_rng(run.seed)
    opts = GpSolverOptions(gap_tol=gp_gap_tol) if gp_gap_tol else None

    # 1. grid-search equivalence, K=2 max-min.  Every grid point is feasible
    # for the GP, so the GP objective can fall below the grid optimum only by
    # numerical noise; it may exceed it only by the grid resolution.
    shortfall = 0.0
    excess = 0.0
    for _ in range(5):
        fading, _ = drop_users(rng, run.drop_config(), 2)
        cfg = SystemConfig(M=20, K=2, T=40, tau_p=2, E_max=compute_emax(run.drop_config(), 40))
        sol = solve_maxmin(fading, cfg, JOINT, opts=opts)
        _, best = grid_search(fading, cfg, "MaxMin", GridSpec(n=200))
        shortfall = max(shortfall, (best - sol.report.min_se) / best)
        excess = max(excess, (sol.report.min_se - best) / best)
    yield ("grid-equivalence", shortfall <= 1e-5 and excess <= 0.02,
           f"max shortfall {shortfall:.2e} (tol 1e-5), max excess {excess:.2e} (tol 2e-2)")

    # 2. tangent monomial bound sampling
    ok = True
    detail = ""
    for _ in range(20):
        nvars = int(rng.integers(1, 4))
        names = [f"x{i}" for i in range(nvars)]
        terms = [
            mono(float(rng.uniform(0.1, 3.0)),
                 **{v: float(rng.uniform(-2, 2)) for v in names})
            for _ in range(int(rng.integers(1, 5)))
        ]
        g = Posynomial(tuple(terms))
        x0 = {v: float(rng.uniform(0.2, 4.0)) for v in names}
        gt = monomial_approximation(g, x0)
        tangency = abs(evaluate(gt, x0) - evaluate(g, x0)) / evaluate(g, x0)
        if tangency > 1e-12:
            ok, detail = False, f"tangency {tangency:.2e} > 1e-12"
            break
        for _ in range(200):
            x = {v: float(rng.uniform(0.05, 10.0)) for v in names}
            if evaluate(gt, x) > evaluate(g, x) * (1 + 1e-12):
                ok, detail = False, "monomial bound exceeded posynomial"
                break
        if not ok:
            break
    yield "tangent-bound", ok, detail or "tangency<=1e-12, bound holds at sampled points"

    # 3. training-length sweep
    fading, _ = drop_users(rng, run.drop_config(), 3)
    cfg = SystemConfig(M=30, K=3, T=30, tau_p=3, E_max=compute_emax(run.drop_config(), 30))
    values = sweep_tau(fading, cfg, JOINT, "MaxMin", cap=5)
    best_tau = max(values, key=lambda tv: tv[1])[0]
    yield "tau-sweep", best_tau == 3, f"argmax tau_p = {best_tau} (expect K=3)"

    # 4. estimator moments
    stats = validate_estimator(M=50, beta=1.0, p_p=1.0, tau_p=1, num_samples=100_000,
                               seed=run.seed)
    var_err = abs(stats.sample_variance - stats.gamma) / stats.gamma
    inv_err = abs(stats.sample_inverse_moment - stats.inverse_moment_target) / stats.inverse_moment_target
    yield ("estimator-moments", var_err <= 0.02 and inv_err <= 0.02,
           f"variance err {var_err:.3%}, inverse-moment err {inv_err:.3%} (tol 2%)")


def cmd_verify(args) -> int:
    try:
        run = _load_run_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    failed = 0
    for name, passed, detail in _verify_suites(run, args.gp_gap_tol):
        status = "PASS" if passed else "FAIL"
        if not passed:
            failed += 1
        print(f"[{status}] {name}: {detail}")
    print(f"{4 - failed}/4 suites passed")
    return 0 if failed == 0 else 1


def cmd_sweep_tau(args) -> int:
    try:
        run = _load_run_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.beta:
        fading = LargeScaleFading(beta=np.asarray([float(b) for b in args.beta.split(",")]))
        run = replace(run, k=fading.K)
    else:
        rng = np.random.default_rng(run.seed)
        fading, _ = drop_users(rng, run.drop_config(), run.k)
    cfg = run.system_config()
    utility = args.utility
    values = sweep_tau(fading, cfg, run.mode, utility, cap=args.cap)
    print(f"{'tau_p':>6} {utility + ' SE':>14}")
    for tau, val in values:
        print(f"{tau:>6} {val:>14.6f}")
    best = max(values, key=lambda tv: tv[1])[0]
    print(f"best tau_p = {best} (K = {cfg.K})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimopower",
        description="Joint pilot/payload power control for massive MIMO uplink",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="RNG seed (default 1)")
        p.add_argument("--mode", choices=[JOINT, DATA_ONLY], help="optimization mode")

    p = sub.add_parser("solve", help="solve one instance")
    common(p)
    p.add_argument("--scheme", default=MAXMIN_JOINT, choices=ALL_SCHEMES)
    p.add_argument("--beta", help="comma-separated large-scale coefficients")
    p.add_argument("--beta-file", help="file with one coefficient per line")
    p.add_argument("--out-csv", help="write the allocation to this CSV file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("campaign", help="run the Monte Carlo campaign")
    common(p)
    p.add_argument("--drops", type=int, help="number of user drops")
    p.add_argument("--schemes", help="comma-separated scheme list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel workers (default 1)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("verify", help="run the oracle verification suites")
    common(p)
    p.add_argument("--gp-gap-tol", type=float,
                   help="override the GP duality-gap tolerance (fault injection)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-tau", help="utility vs training length")
    common(p)
    p.add_argument("--beta", help="comma-separated large-scale coefficients")
    p.add_argument("--utility", default="MaxMin", choices=["MaxMin", "Sum"])
    p.add_argument("--cap", type=int, default=12, help="sweep tau_p up to K+cap")
    p.set_defaults(func=cmd_sweep_tau)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
