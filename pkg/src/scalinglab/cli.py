"""Command-line experiment runner.

Every experiment returns a table of rows ``(experiment, params, value, tol)``
whose verdict is ``value <= tol``; tables are written as CSV and summarised in
``summary.json``.  Configuration comes from defaults, then a ``key = value``
file, then command-line flags.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds, dirint
from .errors import ConfigError, ContractionOverflow, PreconditionViolated
from .fock import (FockVector, SigmaContext, SingleParticleVector, expansion_partial_sum, sigma_scheme,
                   weyl_matrix_element)
from .quadrature import quad_build
from .symm import LorentzBoost, dilate, mass_rescaling_check, mass_zero_gap, poincare, rotation_matrix
from .testfn import dispersion, gaussian, mass_norm_sq
from .vacuum import scaling_limit_gap

CSV_COLUMNS = ("experiment", "param_json", "value", "tol", "pass")
EXPERIMENTS = ("limit-gap", "symm-check", "expansion", "bounds", "dirint")


@dataclass
class ExperimentConfig:
    s: int = 3
    mass: float = 1.0
    rel_tol: float = 1e-8
    seed: int = 0
    alpha: float = 0.5
    lam_grid: list = field(default_factory=lambda: [1.0, 0.1, 0.01, 0.001])
    mass_grid: list = field(default_factory=lambda: [1.0, 0.1, 0.01])
    dilation_grid: list = field(default_factory=lambda: [0.1, 0.5, 2.0, 10.0])
    beta_grid: list = field(default_factory=lambda: [1.0, 2.0])
    r_over_beta: float = 0.1 / 6
    n_max: int = 3
    nu_cap: int = 2
    budget: int = 10 ** 6
    dirint_cases: int = 100
    out: str = "results"

    def validate(self) -> None:
        if self.s not in (2, 3):
            raise ConfigError("s must be 2 or 3")
        if self.mass < 0:
            raise ConfigError("mass must be nonnegative")
        if not 0 < self.rel_tol < 1:
            raise ConfigError("rel_tol must lie in (0, 1)")
        for name in ("lam_grid", "mass_grid", "dilation_grid", "beta_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} is empty")
            if any(not (isinstance(x, (int, float)) and x > 0) for x in grid):
                raise ConfigError(f"{name} must contain positive numbers")
        if self.n_max < 0 or self.nu_cap < 0:
            raise ConfigError("caps must be nonnegative")
        if self.r_over_beta <= 0:
            raise ConfigError("r_over_beta must be positive")
        if self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.dirint_cases < 1:
            raise ConfigError("dirint_cases must be positive")

    def digest(self) -> str:
        data = {k: v for k, v in asdict(self).items() if k != "out"}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t.strip()]
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(name: str, value):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown configuration key {name!r}")
    kind = kinds[name]
    try:
        if kind == "list":
            if value == "" or value == []:
                return []
            return [float(x) for x in (value if isinstance(value, list) else [value])]
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


def read_config_file(path: str | Path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        out[key] = _coerce(key, _parse_value(value) if value.strip() else "")
    return out


def resolve_config(file_values: dict | None = None, flag_values: dict | None = None) -> ExperimentConfig:
    """Defaults, overridden by the file, overridden by flags."""
    cfg = asdict(ExperimentConfig())
    for source in (file_values or {}, flag_values or {}):
        for k, v in source.items():
            if v is not None:
                cfg[k] = _coerce(k, v)
    out = ExperimentConfig(**cfg)
    out.validate()
    return out


@dataclass
class Row:
    experiment: str
    params: dict
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


@dataclass
class ResultTable:
    name: str
    config_hash: str
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, experiment: str, params: dict, value: float, tol: float) -> Row:
        row = Row(experiment, dict(params, config_hash=self.config_hash), float(value), float(tol))
        self.rows.append(row)
        return row

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([r.experiment, json.dumps(r.params, sort_keys=True), repr(r.value), repr(r.tol),
                            str(r.passed).lower()])


def _probe_function(s: int, alpha: float):
    shift = [0.3] + [0.0] * (s - 1)
    return gaussian(s, alpha, amp=1.0) + gaussian(s, alpha, amp=0.5, part="I", shift=shift)


# -- experiments -------------------------------------------------------------


def run_limit_gap(cfg: ExperimentConfig) -> ResultTable:
    """Scaling-limit gap over the lambda grid and the mass -> 0 gap of a time translation."""
    cfg.validate()
    t = ResultTable("limit-gap", cfg.digest())
    q = quad_build(cfg.s, cfg.rel_tol)
    f = gaussian(cfg.s, cfg.alpha)
    lams = sorted(cfg.lam_grid, reverse=True)
    gaps = []
    for lam in lams:
        if cfg.mass > 0:
            gap, direct, inter = scaling_limit_gap(f, cfg.mass, lam, q, return_routes=True)
            t.add("limit-gap/routes", dict(lam=lam, m=cfg.mass), abs(direct - inter), 1e-7)
        else:
            # the massless vacuum is dilation invariant; evaluate the definition directly
            gap = abs(np.exp(-0.5 * mass_norm_sq(dilate(f, lam), 0.0, q.scaled(1.0 / lam)))
                      - np.exp(-0.5 * mass_norm_sq(f, 0.0, q)))
        prev = gaps[-1] if gaps else 1.0
        gaps.append(gap)
        t.add("limit-gap/gap", dict(lam=lam, m=cfg.mass, bound="previous gap"), gap,
              prev if cfg.mass > 0 else 1e-12)
    if cfg.mass > 0 and len(gaps) > 1:
        t.add("limit-gap/ratio", dict(lam_first=lams[0], lam_last=lams[-1]), gaps[-1], gaps[0] / 10)
    x = np.zeros(cfg.s + 1)
    x[0] = 1.0
    prev = None
    for mu in sorted((cfg.mass * k for k in cfg.mass_grid), reverse=True):
        gap = mass_zero_gap(f, x, None, mu, q)
        tol = (prev if prev is not None else math.inf) if cfg.mass > 0 else 1e-12
        t.add("limit-gap/mass-zero", dict(m=mu, t=1.0), gap, tol)
        prev = gap
    return t


def _symmetry_panel(s: int):
    """Ten Poincare elements: translations, rotations, boosts and composites."""
    xs = [np.r_[0.0, 0.7, np.zeros(s - 1)], np.r_[0.0, -0.4, 0.9, np.zeros(s - 2)],
          np.r_[1.0, np.zeros(s)], np.r_[-0.7, np.zeros(s)]]
    out = [(f"space-translation-{i}", x, None) for i, x in enumerate(xs[:2])]
    out += [(f"time-translation-{i}", x, None) for i, x in enumerate(xs[2:])]
    out += [("rotation-0", np.zeros(s + 1), LorentzBoost.rotation(rotation_matrix(s, 0.8, (0, 1)))),
            ("rotation-1", np.zeros(s + 1), LorentzBoost.rotation(rotation_matrix(s, -2.1, (s - 2, s - 1))))]
    out += [("boost-0", np.zeros(s + 1), LorentzBoost.along(s, 0, 0.3)),
            ("boost-1", np.zeros(s + 1), LorentzBoost.along(s, s - 1, -0.5))]
    comp = LorentzBoost.along(s, 1, 0.4) @ LorentzBoost.rotation(rotation_matrix(s, 0.5, (0, 1)))
    out += [("composite-0", np.r_[0.5, 0.3, -0.2, np.zeros(s - 2)], comp),
            ("composite-1", np.r_[-0.3, np.zeros(s - 1), 0.6], LorentzBoost.along(s, 0, 0.2))]
    return out


def run_symm_check(cfg: ExperimentConfig) -> ResultTable:
    """Vacuum invariance of ||f||_m under Poincare maps, dilation invariance of ||f||_0 and mass rescaling."""
    cfg.validate()
    t = ResultTable("symm-check", cfg.digest())
    q = quad_build(cfg.s, cfg.rel_tol)
    f = _probe_function(cfg.s, cfg.alpha).memoized()
    masses = sorted({0.0, cfg.mass})
    if len(masses) == 1:
        masses.append(1.0)
    for m in masses:
        base = mass_norm_sq(f, m, q)
        for name, x, L in _symmetry_panel(cfg.s):
            val = mass_norm_sq(poincare(f, x, L, m), m, q)
            t.add("symm-check/poincare", dict(case=name, m=m), abs(val - base) / base, 1e-6)
    base0 = mass_norm_sq(f, 0.0, q)
    for lam in cfg.dilation_grid:
        # same scheme on both sides, so the check exercises the dilation itself
        val = mass_norm_sq(dilate(f, lam), 0.0, q)
        t.add("symm-check/dilation", dict(lam=lam), abs(val - base0) / base0, 1e-7)
    x = np.r_[0.4, 0.2, np.zeros(cfg.s - 1)]
    for lam in cfg.dilation_grid:
        val = mass_rescaling_check(f, x, LorentzBoost.along(cfg.s, 0, 0.3), lam, max(cfg.mass, 1.0), q)
        t.add("symm-check/mass-rescaling", dict(lam=lam), val, 1e-6)
    return t


def expansion_data(s: int):
    """Test function and one-particle probe for the expansion experiment."""
    shift_r = [0.2, -0.2, 0.1][:s]
    shift_i = [0.0, 0.2, -0.1][:s]
    f = gaussian(s, 0.15, amp=0.6, shift=shift_r) + gaussian(s, 0.15, amp=0.5, part="I", shift=shift_i)

    def probe(m):
        return SingleParticleVector(
            lambda p: np.exp(-6.0 * dispersion(m, p)) * (1 + 0.5 * p[..., 1] + 0.3j * p[..., 0]), m, "probe")
    return f, probe


def run_expansion(cfg: ExperimentConfig) -> ResultTable:
    """Residual of the truncated short-distance expansion of W(f) against the exact matrix element."""
    cfg.validate()
    t = ResultTable("expansion", cfg.digest())
    q = sigma_scheme(cfg.s, cfg.rel_tol)
    f, probe = expansion_data(cfg.s)
    m = cfg.mass
    ctx = SigmaContext(f, m, q)
    vac = FockVector.vacuum(m)
    exact_vac = weyl_matrix_element(vac, vac, f, q)
    approx = expansion_partial_sum(f, vac, vac, m, 0, 0, q, context=ctx, budget=cfg.budget)
    t.add("expansion/vacuum", dict(caps=[0, 0], m=m), abs(exact_vac - approx), 1e-14)
    bra = FockVector.particles([probe(m)])
    exact = weyl_matrix_element(bra, vac, f, q)
    prev = math.inf
    for nu_cap in range(cfg.nu_cap + 1):
        caps = [cfg.n_max, nu_cap]
        try:
            approx = expansion_partial_sum(f, bra, vac, m, cfg.n_max, nu_cap, q, context=ctx, budget=cfg.budget)
        except ContractionOverflow as exc:
            t.add("expansion/overflow", dict(caps=caps, error=str(exc)), math.nan, 0.0)
            break
        res = abs(exact - approx)
        t.add("expansion/residual", dict(caps=caps, m=m, bound="previous residual"), res, prev)
        prev = res
    else:
        t.add("expansion/final", dict(caps=[cfg.n_max, cfg.nu_cap], m=m), prev, 1e-4)
    return t


def run_bounds(cfg: ExperimentConfig) -> ResultTable:
    """Fit one constant c, validate it on the hold-out panel, then check nuclearity decay."""
    cfg.validate()
    t = ResultTable("bounds", cfg.digest())
    r0 = 1.0
    try:
        consts = bounds.fit_constant_c(cfg.s, cfg.mass, r0)
        reports = bounds.validate_panel(consts, cfg.s, cfg.mass, r0, bounds.holdout_panel(r0))
    except PreconditionViolated as exc:
        t.add("bounds/precondition", dict(stage="fit", error=str(exc)), math.nan, 0.0)
        return t
    t.extra["fitted_constants"] = dict(c=consts.c, c1=consts.c1, c2_max=max(consts.c2.values(), default=0.0),
                                       c3_max=max(consts.c3.values(), default=0.0), panel_hash=consts.panel_hash)
    for kind in sorted({r.kind for r in reports}):
        rs = [r for r in reports if r.kind == kind]
        worst = max(r.lhs / r.rhs for r in rs)
        t.add("bounds/holdout", dict(kind=kind, points=len(rs), violations=sum(not r.passed for r in rs),
                                     c=consts.c), worst, 1.0 + bounds.PASS_SLACK)
    for beta in cfg.beta_grid:
        r = cfg.r_over_beta * beta
        params = dict(beta=beta, r=r, six_r_over_beta=6 * r / beta)
        try:
            bounds.check_decay_regime(r, beta)
            sums, qratio = bounds.nuclearity_partial_sum(r, beta, cfg.s, cfg.n_max + 1, cfg.nu_cap, cfg.mass,
                                                        consts.c)
        except PreconditionViolated as exc:
            t.add("bounds/precondition", dict(params, error=str(exc)), math.nan, 0.0)
            continue
        except AssertionError as exc:
            t.add("bounds/nuclearity", dict(params, error=str(exc)), math.inf, 1.0)
            continue
        for n in range(len(sums) - 1):
            t.add("bounds/nuclearity-ratio", dict(params, n=n, q=qratio), sums[n + 1] / sums[n], qratio)
    return t


def _block_algebra(sizes, rng: np.random.Generator) -> dirint.FiniteCStarAlgebra:
    """Generators of the full block algebra (+)_k M_{sizes[k]}."""
    from scipy.linalg import block_diag
    gens = []
    for k, n in enumerate(sizes):
        blocks = [np.zeros((d, d)) for d in sizes]
        blocks[k] = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        gens.append(block_diag(*blocks))
    return dirint.FiniteCStarAlgebra(gens)


def run_dirint(cfg: ExperimentConfig) -> ResultTable:
    """Commutant agreement, decomposition round trips and cocycle laws on seeded finite systems."""
    cfg.validate()
    t = ResultTable("dirint", cfg.digest())
    rng = np.random.default_rng(cfg.seed)
    disagree = 0
    for _ in range(cfg.dirint_cases):
        di = dirint.random_configuration(rng)
        B = dirint.random_operator(rng, di)
        disagree += dirint.commutes_with_diagonals(B, di) != dirint.is_block_diagonal(B, di)
    t.add("dirint/commutant", dict(cases=cfg.dirint_cases, seed=cfg.seed), disagree, 0)
    for sizes in ([1, 1], [2, 3], [1, 2, 2]):
        alg = _block_algebra(sizes, rng)
        state = dirint.State.from_density(alg, dirint.random_density(rng, alg.n))
        E = dirint.state_expectation(alg, state, cfg.seed)
        comps, dec = dirint.full_decomposition(alg, state, E, cfg.seed)
        W = dec.unitary
        p = dict(blocks=sizes)
        t.add("dirint/reconstruction", p, dirint.reconstruction_residual(state, E, comps), 1e-10)
        t.add("dirint/unitarity", p, float(np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0]))), 1e-10)
        t.add("dirint/intertwining", p, dirint.intertwining_residual(dec), 1e-10)
    for order in range(2, 6):
        for label, sys_ in (("shift", dirint.cyclic_system(order)),
                            ("coboundary", dirint.coboundary_system(order, 2, seed=cfg.seed + order))):
            rep = dirint.cocycle_check(sys_)
            t.add("dirint/cocycle", dict(order=order, system=label, **rep.counts()),
                  sum(rep.counts().values()), 0)
        sys_ = dirint.coboundary_system(order, 2, seed=cfg.seed + order)
        g0, z0 = 1, order - 1
        rep = dirint.cocycle_check(dirint.perturb(sys_, g0, z0, np.exp(0.7j)))
        predicted = dirint.predicted_composition_failures(sys_, g0, z0)
        mismatch = len(set(rep.composition) ^ predicted)
        t.add("dirint/cocycle-perturbed", dict(order=order, g0=g0, z0=z0, failures=len(rep.composition),
                                               predicted=len(predicted)), mismatch, 0)
    return t


RUNNERS: dict[str, Callable[[ExperimentConfig], ResultTable]] = {
    "limit-gap": run_limit_gap,
    "symm-check": run_symm_check,
    "expansion": run_expansion,
    "bounds": run_bounds,
    "dirint": run_dirint,
}


def write_outputs(tables: list[ResultTable], cfg: ExperimentConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    for tbl in tables:
        tbl.write_csv(out / f"{tbl.name}.csv")
    summary = dict(
        config=asdict(cfg) | {"out": None},
        config_hash=cfg.digest(),
        experiments={tbl.name: dict(passed=tbl.passed, rows=len(tbl.rows),
                                    failed=sum(not r.passed for r in tbl.rows), **tbl.extra)
                     for tbl in tables},
        passed=all(tbl.passed for tbl in tables),
    )
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scalinglab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=EXPERIMENTS + ("all",))
    ap.add_argument("--config", metavar="PATH", help="key = value configuration file")
    ap.add_argument("--out", metavar="DIR", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--rel-tol", type=float, dest="rel_tol")
    ap.add_argument("--s", type=int, choices=(2, 3))
    ap.add_argument("--mass", type=float)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any configuration key")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {k: getattr(args, k) for k in ("out", "seed", "rel_tol", "s", "mass")}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            flags[k.strip().replace("-", "_")] = _parse_value(v) if v.strip() else ""
        cfg = resolve_config(file_values, flags)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    names = EXPERIMENTS if args.command == "all" else (args.command,)
    tables = []
    for name in names:
        tbl = RUNNERS[name](cfg)
        tables.append(tbl)
        print(f"{name}: {'pass' if tbl.passed else 'FAIL'} ({len(tbl.rows)} rows)")
    summary = write_outputs(tables, cfg, Path(cfg.out))
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
