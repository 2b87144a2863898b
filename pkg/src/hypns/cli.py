"""Command-line front end: convergence sweeps, existence probes, inequality
audits, the built-in Taylor-Green regression, and config normalization.

Exit codes: 0 pass, 2 acceptance failure, 1 error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .diagnostics import make_energy_report  # noqa: F401  (re-exported for scripts)
from .experiments import (
    ConfigError,
    normalized_dump,
    parse_config,
    run_convergence,
    run_existence_probe,
    run_inequality_audit,
)
from .initial_data import taylor_green
from .nlw import nlw_solve, propagate_mode
from .ns import ns_solve
from .reporting import emit_report
from .spectral import inverse_transform, make_grid

PASS, FAIL, ERROR = 0, 2, 1


def _resolve_out(args, cfg) -> str:
    if args.out:
        return args.out
    env = os.environ.get("HYPNS_OUT")
    if env:
        return env
    return cfg.out_dir


def _cmd_converge(args) -> int:
    cfg = parse_config(args.config)
    result = run_convergence(cfg, jobs=args.jobs)
    out = _resolve_out(args, cfg)
    for path in emit_report(result, out):
        print(f"wrote {path}")

    ok = True
    for row in result.rows:
        status = "blow-up" if row.blowup else "ok"
        print(
            f"eps={row.eps:g} sup_err_sq={row.sup_err_sq:.6g} "
            f"dafermos={row.sup_dafermos:.6g} cross={row.cross_term:.6g} [{status}]"
        )
        ok &= not row.blowup
    if result.fit is None:
        print(f"fit: undefined ({result.fit_note})")
        ok = False
    else:
        floor = cfg.s / 2.0 - cfg.slope_tol
        print(
            f"fit: slope={result.fit.slope:.4f} R2={result.fit.r2:.4f} "
            f"(floor {floor:.4f}, R2 min {cfg.r2_min})"
        )
        ok &= result.fit.slope >= floor and result.fit.r2 >= cfg.r2_min
    print("converge:", "PASS" if ok else "FAIL")
    return PASS if ok else FAIL


def _cmd_exist(args) -> int:
    cfg = parse_config(args.config)
    result = run_existence_probe(cfg, jobs=args.jobs, force=args.force)
    out = _resolve_out(args, cfg)
    os.makedirs(out, exist_ok=True)

    ok = True
    lines = ["epsilon,skipped,blowup,initial_eps_delta_E,sup_eps_delta_E,n_star,composite_monotone"]
    for row in result.rows:
        lines.append(
            f"{row.eps!r},{int(row.skipped)},{int(row.blowup)},{row.initial_eps_delta_e!r},"
            f"{row.sup_eps_delta_e!r},{row.n_star},{int(row.composite_monotone)}"
        )
        if row.skipped:
            print(f"eps={row.eps:g} skipped: {row.skip_reason}")
            ok = False
            continue
        print(
            f"eps={row.eps:g} sup eps^d E={row.sup_eps_delta_e:.6g} "
            f"N*={row.n_star} monotone={row.composite_monotone} blowup={row.blowup}"
        )
        ok &= (not row.blowup) and row.composite_monotone and row.n_star is not None
    path = os.path.join(out, "exist.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {path}")
    ok &= result.sup_bound_ok
    print(f"uniform bound sup_t eps^delta E <= 2 max initial: {result.sup_bound_ok}")
    print("exist:", "PASS" if ok else "FAIL")
    return PASS if ok else FAIL


def _cmd_audit(args) -> int:
    cfg = parse_config(args.config)
    audit = run_inequality_audit(cfg)
    from .diagnostics import TRILINEAR_RATIO_BOUND

    print(f"gagliardo-nirenberg max ratio: {audit.gn_max:.12f} (ok={audit.gn_ok})")
    print(f"sobolev interpolation max ratio: {audit.sobolev_interp_max:.12f} (ok={audit.interp_ok})")
    print(f"sup-norm/besov max ratio (reported only): {audit.linf_besov_max:.6f}")
    print(f"bernstein max ratio: {audit.bernstein_max:.12f} (ok={audit.bernstein_ok})")
    print(f"jackson max ratio: {audit.jackson_max:.12f} (ok={audit.jackson_ok})")
    for n3, worst in sorted(audit.trilinear_max.items()):
        print(f"trilinear max ratio at n={n3}: {worst:.6f}")
    bound_ok = all(v <= TRILINEAR_RATIO_BOUND for v in audit.trilinear_max.values())
    print(f"trilinear stable across n: {audit.trilinear_stable}; under bound {TRILINEAR_RATIO_BOUND}: {bound_ok}")
    ok = audit.gn_ok and audit.interp_ok and audit.bernstein_ok and audit.jackson_ok
    ok = ok and audit.trilinear_stable and bound_ok
    print("audit:", "PASS" if ok else "FAIL")
    return PASS if ok else FAIL


def _cmd_taylor_green(args) -> int:
    # heat-side regression: analytic decay of the vortex
    grid = make_grid(2, 64)
    tg = taylor_green(grid)
    T, dt = 0.5, 1e-3
    final = ns_solve(tg, T, dt=dt)
    exact = np.exp(-2.0 * T) * inverse_transform(tg)
    ns_err = float(np.max(np.abs(inverse_transform(final.v) - exact)))
    print(f"navier-stokes taylor-green max pointwise error at T={T}: {ns_err:.3e}")

    # wave-side regression: per-mode damped oscillator
    eps, Tw = 0.05, 1.0
    res = nlw_solve(tg, 0.0 * tg, eps, Tw, dt=dt)
    amp, _ = propagate_mode(eps, 2.0, Tw, 1.0, 0.0)
    exact_w = amp.real * inverse_transform(tg)
    nlw_err = float(np.max(np.abs(inverse_transform(res.state.u) - exact_w)))
    print(f"damped-wave taylor-green max pointwise error at T={Tw}, eps={eps}: {nlw_err:.3e}")

    ok = ns_err <= 1e-8 and nlw_err <= 1e-8
    print("taylor-green:", "PASS" if ok else "FAIL")
    return PASS if ok else FAIL


def _cmd_normalize_config(args) -> int:
    cfg = parse_config(args.config)
    sys.stdout.write(normalized_dump(cfg))
    return PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypns", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_config=True):
        sp = sub.add_parser(name)
        if needs_config:
            sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out", default=None, help="output directory (overrides HYPNS_OUT and config)")
        sp.add_argument("--force", action="store_true", help="proceed past failed admissibility checks")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers across eps values")
        sp.set_defaults(handler=fn)
        return sp

    add("converge", _cmd_converge)
    add("exist", _cmd_exist)
    add("audit", _cmd_audit)
    add("taylor-green", _cmd_taylor_green, needs_config=False)
    add("normalize-config", _cmd_normalize_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return ERROR
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
