"""Experiment configuration, sweep orchestration, and rate fitting."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .diagnostics import (
    DiagnosticsConfig,
    EnergyReport,
    energy_decay_audit,
    fill_composite,
    interpolation_ratios,
    make_energy_report,
    trilinear_ratio,
)
from .initial_data import (
    DataRecipe,
    HypothesisReport,
    check_bernstein,
    check_hypotheses,
    check_jackson,
    random_divergence_free_field,
    synth_hs_field,
    taylor_green,
    truncate_initial_data,
)
from .ns import NsState, SolverFailure, default_dt, dt_v, ns_solve, plan_steps
from .nlw import nlw_solve
from .spectral import SpectralField, hs_inner, l2_norm, make_grid, sobolev_norm, zero_field


class ConfigError(ValueError):
    """Invalid experiment configuration; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(self.violations))


@dataclass
class ExperimentConfig:
    dim: int = 2
    n: int = 64
    s: float = 0.5
    delta: float = 0.5
    eps_list: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    T: float = 1.0
    dt: float | None = None
    seed: int = 0
    amplitude: float = 1.0
    data_source: str = "synthetic"
    data_file: str | None = None
    eta: float = 0.01
    u1_scale: float = 0.0
    threshold_c: float = 1.0
    composite_n: int | None = None
    energy_ceiling: float = 1e6
    out_dir: str = "out"
    sample_stride: int = 10
    slope_tol: float = 0.1
    r2_min: float = 0.9

    def validate(self) -> list:
        bad = []
        if self.dim not in (2, 3):
            bad.append(f"dim: must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            bad.append(f"n: must be even and >= 8, got {self.n}")
        if not 0.0 < self.s < 1.0:
            bad.append(f"s: s in (0,1) is required for the convergence-rate claims, got {self.s}")
        if not 0.0 < self.delta < 1.0:
            bad.append(f"delta: must lie in (0,1), got {self.delta}")
        if not self.eps_list:
            bad.append("eps_list: must be nonempty")
        elif any(e <= 0 for e in self.eps_list):
            bad.append("eps_list: all entries must be > 0")
        elif any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            bad.append("eps_list: must be strictly descending")
        if self.T < 0:
            bad.append(f"T: must be >= 0, got {self.T}")
        if self.dt is not None and self.dt <= 0:
            bad.append(f"dt: must be > 0 when given, got {self.dt}")
        if self.amplitude < 0:
            bad.append(f"amplitude: must be >= 0, got {self.amplitude}")
        if self.data_source not in ("synthetic", "taylor_green", "file"):
            bad.append(f"data_source: unknown source {self.data_source!r}")
        if self.data_source == "taylor_green" and self.dim != 2:
            bad.append("data_source: taylor_green is 2D only")
        if self.data_source == "file" and not self.data_file:
            bad.append("data_file: required when data_source = file")
        if self.eta <= 0:
            bad.append(f"eta: must be > 0, got {self.eta}")
        if self.u1_scale < 0:
            bad.append(f"u1_scale: must be >= 0, got {self.u1_scale}")
        if self.threshold_c <= 0:
            bad.append(f"threshold_c: must be > 0, got {self.threshold_c}")
        if self.composite_n is not None and self.composite_n < 0:
            bad.append(f"composite_n: must be >= 0 when given, got {self.composite_n}")
        if self.energy_ceiling <= 1:
            bad.append(f"energy_ceiling: must be > 1, got {self.energy_ceiling}")
        if self.sample_stride < 1:
            bad.append(f"sample_stride: must be >= 1, got {self.sample_stride}")
        if self.slope_tol < 0:
            bad.append(f"slope_tol: must be >= 0, got {self.slope_tol}")
        if not 0.0 <= self.r2_min <= 1.0:
            bad.append(f"r2_min: must lie in [0,1], got {self.r2_min}")
        return bad


_LIST_KEYS = {"eps_list"}
_INT_KEYS = {"dim", "n", "seed", "composite_n", "sample_stride"}
_FLOAT_KEYS = {
    "s",
    "delta",
    "T",
    "dt",
    "amplitude",
    "eta",
    "u1_scale",
    "threshold_c",
    "energy_ceiling",
    "slope_tol",
    "r2_min",
}
_STR_KEYS = {"data_source", "data_file", "out_dir"}
_OPTIONAL_KEYS = {"dt", "composite_n", "data_file"}
_ALL_KEYS = _LIST_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def parse_config(path) -> ExperimentConfig:
    """Read the line-oriented ``key = value`` format.

    Lists are comma-separated, ``#`` starts a comment.  Every violation is
    collected (with its line number) before raising, not just the first.
    """
    violations = []
    values = {}
    seen = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                violations.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
                continue
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _ALL_KEYS:
                violations.append(f"line {lineno}: unknown key {key!r}")
                continue
            if key in seen:
                violations.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
                continue
            seen[key] = lineno
            try:
                values[key] = _convert(key, val)
            except ValueError as exc:
                violations.append(f"line {lineno}: {key}: {exc}")

    cfg = ExperimentConfig(**values)
    violations.extend(cfg.validate())
    if violations:
        raise ConfigError(violations)
    return cfg


def _convert(key: str, val: str):
    if key in _OPTIONAL_KEYS and val.lower() in ("none", ""):
        return None
    if key in _LIST_KEYS:
        items = [v.strip() for v in val.split(",") if v.strip()]
        return [float(v) for v in items]
    if key in _INT_KEYS:
        return int(val)
    if key in _FLOAT_KEYS:
        return float(val)
    return val


def normalized_dump(cfg: ExperimentConfig) -> str:
    """Canonical re-parseable rendering of a configuration."""
    lines = []
    for f in fields(ExperimentConfig):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if f.name in _LIST_KEYS:
            val = ", ".join(repr(float(v)) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Rate fitting
# ---------------------------------------------------------------------------


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    excluded: int = 0


def fit_rate(pairs) -> RateFit | None:
    """Least squares of log(value) against log(eps).

    Nonpositive values are excluded (counted in ``excluded``); returns
    None when fewer than two usable points remain.
    """
    usable = [(e, v) for e, v in pairs if e > 0 and v > 0 and math.isfinite(v)]
    excluded = len(list(pairs)) - len(usable)
    if len(usable) < 2:
        return None
    x = np.log([e for e, _ in usable])
    y = np.log([v for _, v in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateFit(float(slope), float(intercept), r2, len(usable), excluded)


# ---------------------------------------------------------------------------
# Reference data
# ---------------------------------------------------------------------------


def save_field(path, f: SpectralField):
    np.savez(path, dim=f.grid.dim, n=f.grid.n, coeffs=np.asarray(f.coeffs))


def load_field(path, grid) -> SpectralField:
    data = np.load(path)
    if int(data["dim"]) != grid.dim or int(data["n"]) != grid.n:
        raise ValueError(
            f"field file is {int(data['dim'])}D n={int(data['n'])}, expected {grid.dim}D n={grid.n}"
        )
    return SpectralField(grid, data["coeffs"])


def build_reference_field(cfg: ExperimentConfig, grid) -> SpectralField:
    if cfg.data_source == "taylor_green":
        return cfg.amplitude * taylor_green(grid)
    if cfg.data_source == "file":
        return load_field(cfg.data_file, grid)
    recipe = DataRecipe(cfg.seed, cfg.s, cfg.dim, cfg.amplitude, cfg.eta)
    return synth_hs_field(recipe, grid)


def build_wave_data(cfg: ExperimentConfig, v0: SpectralField, eps: float):
    u0, u1 = truncate_initial_data(v0, eps)
    if cfg.u1_scale > 0:
        recipe = DataRecipe(cfg.seed + 1000003, cfg.s, cfg.dim, cfg.u1_scale, cfg.eta)
        u1 = synth_hs_field(recipe, v0.grid)
    return u0, u1


# ---------------------------------------------------------------------------
# Convergence sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    eps: float
    sup_err_sq: float
    sup_dafermos: float
    sup_eps_delta_e: float
    cross_term: float
    blowup: bool
    blowup_t: float | None
    first_threshold_violation_t: float | None
    n_star: int | None
    hypothesis: HypothesisReport | None
    reports: list


@dataclass
class SweepResult:
    config: ExperimentConfig
    dt_used: float
    rows: list
    fit: RateFit | None
    fit_note: str = ""


def _sample_times(T: float, dt: float, stride: int):
    n_steps, dt_eff = plan_steps(T, dt)
    idx = sorted(set(range(0, n_steps + 1, max(stride, 1))) | {0, n_steps})
    return np.array([T if i == n_steps else i * dt_eff for i in idx])


def _converge_one(cfg: ExperimentConfig, eps: float, v0_coeffs, ns_times, ns_coeffs, dt: float):
    grid = make_grid(cfg.dim, cfg.n)
    v0 = SpectralField(grid, v0_coeffs)
    u0, u1 = build_wave_data(cfg, v0, eps)
    hyp = check_hypotheses(u0, u1, v0, eps, cfg.s, cfg.delta, cfg.dim)
    dcfg = DiagnosticsConfig(cfg.dim, cfg.delta, threshold_c=cfg.threshold_c)

    reports = []
    cross_vals = []
    sample_i = {"i": 0}

    def observer(state):
        i = sample_i["i"]
        if i >= len(ns_times) or abs(state.t - ns_times[i]) > 1e-9 * max(cfg.T, 1.0):
            raise RuntimeError("wave samples drifted out of alignment with the reference run")
        v = SpectralField(grid, ns_coeffs[i])
        reports.append(make_energy_report(state, dcfg, v=v))
        vt = dt_v(NsState(v, state.t))
        weight = 0.0 if cfg.dim == 2 else 0.5
        cross_vals.append(hs_inner(state.ut, vt, weight))
        sample_i["i"] = i + 1

    blowup, blowup_t = False, None
    try:
        result = nlw_solve(
            u0,
            u1,
            eps,
            cfg.T,
            dt=dt,
            observer=observer,
            stride=cfg.sample_stride,
            blowup_factor=cfg.energy_ceiling,
        )
        blowup, blowup_t = result.blew_up, result.blowup_t
    except SolverFailure as exc:
        blowup, blowup_t = True, exc.t

    audit = energy_decay_audit(
        reports,
        eps,
        cfg.delta,
        u0_l2=l2_norm(u0),
        dim=cfg.dim,
        n_exponent=cfg.composite_n,
        u0_h_half=sobolev_norm(u0, 0.5) if cfg.dim == 3 else None,
    )
    fill_composite(reports, audit.used_n)

    trapezoid = getattr(np, "trapezoid", np.trapz)
    times = np.array([r.t for r in reports])
    cross = float(eps * trapezoid(np.array(cross_vals), times)) if len(reports) > 1 else 0.0

    return SweepRow(
        eps=eps,
        sup_err_sq=max((r.err_sq for r in reports), default=math.nan),
        sup_dafermos=max((r.dafermos for r in reports), default=math.nan),
        sup_eps_delta_e=audit.sup_eps_delta_e,
        cross_term=cross,
        blowup=blowup,
        blowup_t=blowup_t,
        first_threshold_violation_t=audit.first_threshold_violation_t,
        n_star=audit.n_star,
        hypothesis=hyp,
        reports=reports,
    )


def run_convergence(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Solve the reference system once, then the relaxed system per eps,
    recording sup-in-time errors and the full diagnostic series.

    Deterministic for a fixed (config, seed) regardless of ``jobs``."""
    bad = cfg.validate()
    if bad:
        raise ConfigError(bad)
    grid = make_grid(cfg.dim, cfg.n)
    v0 = build_reference_field(cfg, grid)
    dt = cfg.dt if cfg.dt is not None else default_dt(grid, v0)

    ns_times, ns_coeffs = [], []

    def ns_observer(state):
        ns_times.append(state.t)
        ns_coeffs.append(state.v.coeffs)

    ns_solve(v0, cfg.T, dt=dt, observer=ns_observer, stride=cfg.sample_stride)
    ns_times = np.array(ns_times)

    args = [(cfg, eps, v0.coeffs, ns_times, ns_coeffs, dt) for eps in cfg.eps_list]
    if jobs <= 1:
        rows = [_converge_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_converge_one, *zip(*args)))
    rows.sort(key=lambda r: -r.eps)

    fit = fit_rate([(r.eps, r.sup_err_sq) for r in rows])
    note = "" if fit is not None else "fit undefined: need at least two usable rows"
    return SweepResult(config=cfg, dt_used=dt, rows=rows, fit=fit, fit_note=note)


# ---------------------------------------------------------------------------
# Existence probe
# ---------------------------------------------------------------------------


@dataclass
class ExistenceRow:
    eps: float
    skipped: bool
    skip_reason: str
    hypothesis: HypothesisReport | None
    blowup: bool
    blowup_t: float | None
    initial_eps_delta_e: float
    sup_eps_delta_e: float
    n_star: int | None
    composite_monotone: bool
    first_threshold_violation_t: float | None
    base_monotone: bool | None
    reports: list


@dataclass
class ExistenceResult:
    config: ExperimentConfig
    rows: list
    max_initial_eps_delta_e: float
    sup_bound_ok: bool


def _exist_one(cfg: ExperimentConfig, eps: float, v0_coeffs, dt: float, force: bool):
    grid = make_grid(cfg.dim, cfg.n)
    v0 = SpectralField(grid, v0_coeffs)
    u0, u1 = build_wave_data(cfg, v0, eps)
    hyp = check_hypotheses(u0, u1, v0, eps, cfg.s, cfg.delta, cfg.dim)
    dcfg = DiagnosticsConfig(cfg.dim, cfg.delta, threshold_c=cfg.threshold_c)

    if not hyp.passed and not force:
        return ExistenceRow(
            eps, True, "admissibility hypotheses failed (rerun with force to proceed)", hyp,
            False, None, math.nan, math.nan, None, False, None, None, [],
        )

    reports = []

    def observer(state):
        reports.append(make_energy_report(state, dcfg))

    blowup, blowup_t = False, None
    try:
        result = nlw_solve(
            u0, u1, eps, cfg.T, dt=dt, observer=observer,
            stride=cfg.sample_stride, blowup_factor=cfg.energy_ceiling,
        )
        blowup, blowup_t = result.blew_up, result.blowup_t
    except SolverFailure as exc:
        blowup, blowup_t = True, exc.t

    audit = energy_decay_audit(
        reports,
        eps,
        cfg.delta,
        u0_l2=l2_norm(u0),
        dim=cfg.dim,
        n_exponent=cfg.composite_n,
        u0_h_half=sobolev_norm(u0, 0.5) if cfg.dim == 3 else None,
    )
    fill_composite(reports, audit.used_n)
    return ExistenceRow(
        eps=eps,
        skipped=False,
        skip_reason="",
        hypothesis=hyp,
        blowup=blowup,
        blowup_t=blowup_t,
        initial_eps_delta_e=eps**cfg.delta * reports[0].e_delta,
        sup_eps_delta_e=audit.sup_eps_delta_e,
        n_star=audit.n_star,
        composite_monotone=audit.composite_monotone,
        first_threshold_violation_t=audit.first_threshold_violation_t,
        base_monotone=audit.base_monotone,
        reports=reports,
    )


def run_existence_probe(cfg: ExperimentConfig, jobs: int = 1, force: bool = False) -> ExistenceResult:
    bad = cfg.validate()
    if bad:
        raise ConfigError(bad)
    grid = make_grid(cfg.dim, cfg.n)
    v0 = build_reference_field(cfg, grid)
    dt = cfg.dt if cfg.dt is not None else default_dt(grid, v0)

    args = [(cfg, eps, v0.coeffs, dt, force) for eps in cfg.eps_list]
    if jobs <= 1:
        rows = [_exist_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_exist_one, *zip(*args)))
    rows.sort(key=lambda r: -r.eps)

    ran = [r for r in rows if not r.skipped]
    max_initial = max((r.initial_eps_delta_e for r in ran), default=math.nan)
    sup_ok = bool(ran) and all(r.sup_eps_delta_e <= 2.0 * max_initial for r in ran)
    return ExistenceResult(cfg, rows, max_initial, sup_ok)


# ---------------------------------------------------------------------------
# Inequality audit
# ---------------------------------------------------------------------------


@dataclass
class InequalityAudit:
    gn_max: float
    sobolev_interp_max: float
    linf_besov_max: float
    bernstein_max: float
    jackson_max: float
    trilinear_max: dict
    gn_ok: bool
    interp_ok: bool
    bernstein_ok: bool
    jackson_ok: bool
    trilinear_stable: bool
    n_fields: int


def run_inequality_audit(
    cfg: ExperimentConfig,
    n_fields: int = 200,
    trilinear_fields: int = 500,
    trilinear_ns=(16, 32),
) -> InequalityAudit:
    """Random-field sweeps of the exact lattice inequalities plus the 3D
    trilinear estimate, reporting max ratios per resolution."""
    bad = cfg.validate()
    if bad:
        raise ConfigError(bad)
    grid = make_grid(cfg.dim, cfg.n)

    gn_max = interp_max = linf_max = 0.0
    for i in range(n_fields):
        f = random_divergence_free_field(grid, cfg.seed * 1009 + i)
        r = interpolation_ratios(f, cfg.delta)
        gn_max = max(gn_max, r["gagliardo_nirenberg"])
        interp_max = max(interp_max, r["sobolev_interpolation"])
        linf_max = max(linf_max, r["linf_besov"])

    bern_max = jack_max = 0.0
    sigmas = (cfg.s, 1.0, 1.0 + cfg.delta)
    for i in range(max(1, n_fields // 4)):
        recipe = DataRecipe(cfg.seed * 2003 + i, cfg.s, cfg.dim, 1.0, cfg.eta)
        v0 = synth_hs_field(recipe, grid)
        for eps in cfg.eps_list:
            u0, _ = truncate_initial_data(v0, eps)
            jack_max = max(jack_max, check_jackson(v0, u0, eps, cfg.s))
            for sig in sigmas:
                bern_max = max(bern_max, check_bernstein(v0, u0, eps, sig, cfg.s))

    # low-mode-dominated spectra keep the max-ratio statistic comparable
    # across resolutions
    trilinear_max = {}
    for n3 in trilinear_ns:
        g3 = make_grid(3, n3)
        worst = 0.0
        for i in range(trilinear_fields):
            f = random_divergence_free_field(
                g3, cfg.seed * 4001 + 1009 * n3 + i, band=g3.dealias_cutoff, slope=3.0
            )
            worst = max(worst, trilinear_ratio(f))
        trilinear_max[n3] = worst

    vals = list(trilinear_max.values())
    stable = max(vals) <= 1.10 * min(vals) if len(vals) > 1 and min(vals) > 0 else True
    return InequalityAudit(
        gn_max=gn_max,
        sobolev_interp_max=interp_max,
        linf_besov_max=linf_max,
        bernstein_max=bern_max,
        jackson_max=jack_max,
        trilinear_max=trilinear_max,
        gn_ok=gn_max <= 1.0 + 1e-12,
        interp_ok=interp_max <= 1.0 + 1e-12,
        bernstein_ok=bern_max <= 1.0,
        jackson_ok=jack_max <= 1.0,
        trilinear_stable=stable,
        n_fields=n_fields,
    )
