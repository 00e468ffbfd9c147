"""Command-line front end: run verification suites and write report.json plus CSV tables."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .report import FAIL, VerificationReport

SCHEMA_VERSION = 1
SUITES = ("constants", "counterexamples", "sparse-bmo", "rdf", "czo")
MAX_DEPTH = {1: 16, 2: 8}
ENV_PREFIX = "WBMO_"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    depth: int = 8
    dim: int = 1
    seed: int = 0
    n_max: int = 20
    tolerance: float = 1e-12
    out: str = "wbmo-out"
    jobs: int = 1
    weights: list = field(default_factory=list)  # names from the stock family; empty means all
    instances: int = 8

    def validate(self) -> None:
        if self.dim not in MAX_DEPTH:
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if not 1 <= self.depth <= MAX_DEPTH[self.dim]:
            raise ConfigError(f"depth must lie in [1, {MAX_DEPTH[self.dim]}] for dim {self.dim}")
        if self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if not self.tolerance >= 0:
            raise ConfigError("tolerance must be nonnegative")
        if self.jobs < 1 or self.instances < 1:
            raise ConfigError("jobs and instances must be positive")

    def public(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("jobs")
        return d


_CASTS = {f.name: f.type for f in fields(RunConfig)}


def _cast(name: str, raw):
    kind = _CASTS[name]
    if kind == "list":
        if isinstance(raw, str):
            return [s for s in raw.split(",") if s]
        return list(raw)
    return {"int": int, "float": float, "str": str}[kind](raw)


def load_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Precedence: command-line flags, then ``WBMO_*`` environment variables, then the config file."""
    values: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(_CASTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for name in _CASTS:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            values[name] = environ[key]
    for name in _CASTS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        cfg = RunConfig(**{k: _cast(k, v) for k, v in values.items()})
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# suites; each returns (reports, {csv name: (header, rows)})


def _grid(cfg: RunConfig, lo: float = -1.0, hi: float = 1.0):
    from .grid import DyadicGrid

    return DyadicGrid((lo,) * cfg.dim, hi - lo, cfg.dim, cfg.depth)


def _weights(grid, cfg: RunConfig):
    from .weights import stock_weights

    ws = stock_weights(grid)
    if cfg.weights:
        by = {w.label: w for w in ws}
        missing = [n for n in cfg.weights if n not in by]
        if missing:
            raise ConfigError(f"unknown weights {missing}; choose from {sorted(by)}")
        ws = [by[n] for n in cfg.weights]
    return ws


def suite_constants(cfg: RunConfig):
    from .bmo import check_bmoconst, check_inclusions, check_msharp_identity
    from .grid import GridFunction
    from .weights import a1_characteristic, ainfty_characteristic, ap_characteristic

    grid = _grid(cfg)
    tol = cfg.tolerance
    reports, rows = [], []
    rng = np.random.default_rng(cfg.seed)
    # BMO checks include weak norms, quadratic in the cube size; cap the depth
    coarse = grid if cfg.depth <= 8 else _grid(RunConfig(depth=8, dim=cfg.dim))
    for w, wc in zip(_weights(grid, cfg), _weights(coarse, cfg)):
        sigma = w.inverse()
        sup = a1_characteristic(sigma, form="sup")
        mx = a1_characteristic(sigma, form="maximal")
        a2 = ap_characteristic(w, 2.0)
        ainf = ainfty_characteristic(w)
        a1w = a1_characteristic(w)
        tag = w.label
        reports.append(VerificationReport.identity(f"constants.a1_forms.{tag}", "prop:winva1char", mx, sup, tol))
        reports.append(VerificationReport.inequality(f"constants.a2_by_a1.{tag}", "sec:weights", a2, a1w, tol))
        reports.append(VerificationReport.inequality(f"constants.ainf_by_a1.{tag}", "sec:weights", ainf, a1w, tol))
        rows.append([tag, sup, mx, a1w, a2, ainf])
        f = GridFunction(coarse, rng.standard_normal(coarse.shape))
        checks = check_inclusions(f, wc, tol=tol) + check_bmoconst(f, wc, tol=tol)
        for r in checks + check_msharp_identity(f, wc, tol=max(tol, 1e-12)):
            r.check_id = f"{r.check_id}.{tag}"
            reports.append(r)
    return reports, {"constants": (["weight", "a1_inverse_sup", "a1_inverse_maximal", "a1", "a2", "ainf"], rows)}


def suite_counterexamples(cfg: RunConfig):
    from .sparse import (
        height_function, make_fn_family, make_growing_family, shrinking_average, sparse_apply, sparse_apply_at,
    )

    reports, rows = [], []
    for n in range(1, cfg.n_max + 1):
        r = shrinking_average(n)
        reports.append(
            VerificationReport.identity(
                f"counterexamples.shrinking.mean.n{n:02d}", "section:czo", r.mean, r.limit, 1e-10,
                f"truncated closed form {r.exact!r}",
            )
        )
        reports.append(
            VerificationReport.inequality(
                f"counterexamples.shrinking.osc.n{n:02d}", "section:czo", n / 4, r.oscillation, 0.0,
                "n/4 against the mean oscillation over J_n",
            )
        )
        rows.append([n, r.n_trunc, r.mean, r.limit, r.oscillation, n / 4])
    fam = make_fn_family(50)
    one = fam.grid.indicator([0.0], [1.0])
    a = sparse_apply(fam, one).values
    h = height_function(fam).values
    reports.append(
        VerificationReport.identity("counterexamples.height", "section:czo", float(np.max(np.abs(a - 0.5 * h))), 0.0, 0.0)
    )
    gfam = make_growing_family(50)
    val = sparse_apply_at(gfam, gfam.grid.constant(1.0), [0.0])
    reports.append(VerificationReport.identity("counterexamples.growing", "section:czo", val, 51.0, 0.0))
    return reports, {"shrinking": (["n", "truncation", "mean", "limit", "oscillation", "n_over_4"], rows)}


def suite_sparse_bmo(cfg: RunConfig):
    from .grid import GridFunction
    from .sparse import carleson_sum, random_sparse_family, verify_sparsity, verify_wbmosparse
    from .weights import ainfty_characteristic

    # weak BMO norms are quadratic in the cube size; cap the depth
    grid = _grid(cfg) if cfg.depth <= 8 else _grid(RunConfig(depth=8, dim=cfg.dim))
    rng = np.random.default_rng(cfg.seed + 1)
    weights = _weights(grid, cfg)
    reports, rows = [], []
    for i in range(cfg.instances):
        fam = random_sparse_family(grid, rng, eta=0.5)
        w = weights[i % len(weights)]
        f = GridFunction(grid, rng.uniform(-1, 1, grid.shape) / w.values)
        ok = verify_sparsity(fam)
        reports.append(VerificationReport.inequality(f"sparse.sparsity.{i:03d}", "section:czo", 0.5, ok.worst_fraction, 1e-12))
        for r in verify_wbmosparse(fam, w, f, cfg.tolerance):
            r.check_id = f"{r.check_id}.{i:03d}"
            reports.append(r)
        ainf = ainfty_characteristic(w)
        s, bound = carleson_sum(fam, w, grid.root, ainf)
        reports.append(VerificationReport.inequality(f"sparse.carleson.{i:03d}", "prop:wainfsparse", s, bound, 1e-12))
        rows.append([i, w.label, len(fam), s, bound])
    return reports, {"carleson": (["instance", "weight", "members", "sum", "bound"], rows)}


def suite_rdf(cfg: RunConfig):
    from .extrapolate import (
        ExtrapolationConfig, LebesgueSpace, certified_rdf, check_rdf, extrapolation_demo, fefferman_stein_probe,
        probe_bank, sparse_phi,
    )
    from .grid import DyadicGrid, GridFunction
    from .sparse import shrinking_dyadic_family, sparse_apply
    from .weights import identity_weight, power_weight

    grid = DyadicGrid((0.0,) * cfg.dim, 1.0, cfg.dim, min(cfg.depth, 10))
    rng = np.random.default_rng(cfg.seed + 2)
    reports, rows = [], []
    X2 = LebesgueSpace.unweighted(grid, 2.0)
    for i in range(cfg.instances):
        f = GridFunction(grid, rng.exponential(size=grid.shape) * (rng.uniform(size=grid.shape) < 0.3))
        if not np.any(f.values > 0):
            continue
        res = certified_rdf(f, X2)
        for r in check_rdf(res, f, X2, tol=1e-10):
            r.check_id = f"{r.check_id}.{i:03d}"
            reports.append(r)
    # the weak sharp maximal function is quadratic in the cube size, so the
    # Fefferman-Stein probe runs on a coarser grid
    probe_grid = DyadicGrid((0.0,) * cfg.dim, 1.0, cfg.dim, min(cfg.depth, 6))
    fam = shrinking_dyadic_family(grid)
    T = lambda h: sparse_apply(fam, h)  # noqa: E731
    ecfg = ExtrapolationConfig(sparse_phi(fam.eta))
    f = grid.indicator((0.0,) * cfg.dim, (0.5,) * cfg.dim)
    for p in (1.5, 2.0, 3.0):
        for v in (identity_weight(grid), power_weight(grid, 0.25), power_weight(grid, -0.25)):
            X = LebesgueSpace(p, v)
            out = extrapolation_demo(T, X, ecfg, f, tag=f"p{p:g}.{v.label}")
            reports += out.reports
            probe = fefferman_stein_probe(_coarse_space(X, probe_grid), probe_bank(probe_grid))
            reports.append(
                VerificationReport.inequality(
                    f"rdf.fs_probe.p{p:g}.{v.label}", "thm:fefsteinbfs", probe.c_x, probe.c_x_weak, 1e-12,
                    f"{probe.used} used, {probe.skipped} skipped",
                )
            )
            vals = {c["quantity"]: c["value"] for c in out.chain}
            rows.append([p, v.label, vals.get("B"), vals.get("[w^-1]_A1"), vals.get("C_X(Tf)"), vals.get("||Tf||_X"),
                         probe.c_x, probe.c_x_weak])
    return reports, {"extrapolation": (["p", "weight", "B", "a1", "c_x_tf", "tf_norm", "c_x", "c_x_weak"], rows)}


def suite_czo(cfg: RunConfig):
    from .czo import apply_czo, check_kernel_smoothness, hilbert_kernel, sparse_dominate, verify_czo_theorem
    from .grid import DyadicGrid, GridFunction
    from .weights import Power, b_omega_characteristic, check_embedding, identity_weight, power_weight

    reports, rows = [], []
    if cfg.dim != 1:
        return [VerificationReport.skipped("czo.dimension", "section:czo", notes="kernel suite is one-dimensional")], {}
    k = hilbert_kernel()
    bad, worst = check_kernel_smoothness(k, rng=np.random.default_rng(cfg.seed + 3))
    reports.append(VerificationReport.inequality("czo.kernel_smoothness", "czo:osc_estimate", worst, 1.0, 1e-12,
                                                 f"{bad} violations"))
    depth = min(cfg.depth, 12)
    grid = DyadicGrid.interval(-4.0, 4.0, depth)
    x = grid.axis_centers()
    inputs = {
        "unit": ((x >= 0) & (x < 1)).astype(float),
        "odd": np.sign(x) * (np.abs(x) < 1),
        "wave": np.cos(3 * x) * (np.abs(x) < 2),
    }
    one_b = b_omega_characteristic(identity_weight(grid), k.omega)
    for name, fv in inputs.items():
        f = GridFunction(grid, fv)
        tf = apply_czo(k, f)
        cert = sparse_dominate(tf)
        reports.append(VerificationReport.inequality(f"czo.domination.{name}", "lerners_formula", -cert.min_margin, 1e-12, 0.0,
                                                     f"{len(cert.members)} cubes; sparse {cert.sparse_ok}"))
        for w in (identity_weight(grid), power_weight(grid, 0.25), power_weight(grid, 0.5)):
            res = verify_czo_theorem(k, w, f, tf=tf, one_b=one_b)
            for r in res.reports:
                r.check_id = f"{r.check_id}.{name}"
                reports.append(r)
            rows.append([depth, name, w.label, res.ratio1, res.ratio2, res.c1, res.c2])
    egrid = DyadicGrid.interval(-1.0, 1.0, min(cfg.depth, 10))
    for alpha in (0.5, 1.0):
        for p in (1.25, 1.5, 2.0):
            for delta in (-0.25, 0.0, 0.25):
                if not -1 < delta < p - 1:
                    continue
                w = identity_weight(egrid) if delta == 0 else power_weight(egrid, delta)
                r = check_embedding(w, Power(alpha), p)
                r.check_id += f".a{alpha:g}"
                reports.append(r)
    return reports, {"czo": (["depth", "input", "weight", "ratio_bmo_one", "ratio_bmo_inf", "c1", "c2"], rows)}


def _coarse_space(X, grid):
    from .extrapolate import LebesgueSpace
    from .weights import make_weight

    v = X.v
    if getattr(v, "power", None) is None or v.power == 0:
        return LebesgueSpace.unweighted(grid, X.p)
    return LebesgueSpace(X.p, make_weight(grid, {"kind": "power", "delta": v.power, "center": v.center}))


SUITE_FUNCS = {
    "constants": suite_constants,
    "counterexamples": suite_counterexamples,
    "sparse-bmo": suite_sparse_bmo,
    "rdf": suite_rdf,
    "czo": suite_czo,
}


def _run_suite(name: str, cfg: RunConfig):
    reports, tables = SUITE_FUNCS[name](cfg)
    return [r.to_dict() for r in reports], tables


def run(subcommand: str, cfg: RunConfig) -> tuple[list[dict], dict]:
    names = SUITES if subcommand == "all" else (subcommand,)
    if cfg.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_run_suite, names, [cfg] * len(names)))
    else:
        results = [_run_suite(n, cfg) for n in names]
    reports, tables = [], {}
    for rs, ts in results:
        reports += rs
        tables.update(ts)
    reports.sort(key=lambda r: r["check_id"])
    return reports, tables


def write_outputs(out: Path, cfg: RunConfig, reports: list[dict], tables: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    counts = {"pass": 0, "fail": 0, "skipped": 0}
    for r in reports:
        counts[r["status"]] += 1
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg.public(), "summary": counts, "reports": reports}
    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for name, (header, rows) in sorted(tables.items()):
        with open(out / f"{name}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            wr.writerows(rows)
    return path


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wbmo", description="Verification suites for weighted BMO estimates.")
    ap.add_argument("subcommand", choices=SUITES + ("all",))
    ap.add_argument("--config", help="JSON file with run settings")
    ap.add_argument("--depth", type=int)
    ap.add_argument("--dim", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory (default wbmo-out)")
    ap.add_argument("--n-max", dest="n_max", type=int)
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--jobs", type=int, help="worker processes for independent suites")
    ap.add_argument("--instances", type=int, help="random instances per suite")
    ap.add_argument("--weights", type=lambda s: [x for x in s.split(",") if x], help="comma separated weight labels")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    try:
        cfg = load_config(args)
        reports, tables = run(args.subcommand, cfg)
    except ConfigError as e:
        print(f"wbmo: invalid configuration: {e}", file=sys.stderr)
        return 2
    path = write_outputs(Path(cfg.out), cfg, reports, tables)
    failed = [r for r in reports if r["status"] == FAIL]
    print(f"{len(reports)} checks, {len(failed)} failed; report at {path}")
    for r in failed:
        print(f"FAIL {r['check_id']}: lhs={r['lhs']} rhs={r['rhs']} {r['notes']}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
