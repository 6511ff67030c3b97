"""Command-line driver: ``ldm {build,solve,reference,compare,bench,reproduce}``.

Every subcommand writes into ``--out`` (default ``.``).  Metrics files hold
no wall-clock data, so two runs with the same seed write identical bytes;
timings go to ``timings.json``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .banded import BandedSymMatrix
from .bregman import SOLVERS, SolverConfig, solve
from .config import ExperimentConfig, dumps_config, load_config, read_matrix, write_matrix
from .dense_reference import eig_sym, fermi_dirac_density_matrix, projector_density_matrix
from .energy import evaluate
from .errors import LDMError
from .metrics import check_thm1, check_thm2, compare, scaling_study

log = logging.getLogger("ldm")

BOUND_CHECK_MAX_N = 2000
SCALING_KINDS = ("alg1", "alg2", "alg4", "alg5", "et_cheby", "fd_cheby")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _content_hash(cfg: ExperimentConfig) -> str:
    h = hashlib.sha256(dumps_config(cfg).encode())
    if cfg.hamiltonian:
        h.update(Path(cfg.hamiltonian).read_bytes())
    return h.hexdigest()


def _write_manifest(out: Path, experiment: str, cfg: ExperimentConfig, outputs: list[str]) -> None:
    _write_json(
        out / "manifest.json",
        {
            "experiment": experiment,
            "config": cfg.to_flat(),
            "outputs": sorted(outputs),
            "input_hash": _content_hash(cfg),
        },
    )


@contextlib.contextmanager
def _thread_limit():
    limit = os.environ.get("LDM_THREADS")
    if not limit:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.warning("LDM_THREADS set but threadpoolctl is not installed; ignoring")
        yield
        return
    with threadpool_limits(limits=int(limit)):
        yield


def _spectrum_summary(H, N: int) -> dict:
    lam = eig_sym(H.to_dense() if isinstance(H, BandedSymMatrix) else H).values
    out = {"n": int(lam.size), "N": N, "lambda_min": lam[0], "lambda_max": lam[-1]}
    if 0 < N < lam.size:
        out.update(lambda_N=lam[N - 1], lambda_N1=lam[N], gap=lam[N] - lam[N - 1])
    out["lowest"] = lam[: min(lam.size, 2 * N + 2)].tolist()
    return out


def _bounds(H, cfg: SolverConfig, P) -> list[dict]:
    Hd = H.to_dense() if isinstance(H, BandedSymMatrix) else H
    if Hd.shape[0] > BOUND_CHECK_MAX_N or math.isinf(cfg.eta):
        return []
    # a converged iterate is feasible only to the stopping tolerance
    atol = float(np.linalg.norm(Hd)) * cfg.tolerance(False) * max(1.0, float(np.linalg.norm(P)))
    if cfg.zero_temperature:
        checks = check_thm1(Hd, cfg.N, cfg.eta, P, atol=atol)
    else:
        checks = check_thm2(Hd, cfg.N, cfg.beta, cfg.eta, P, atol=atol)
    return [c.to_dict() for c in checks]


def run_solve(cfg: ExperimentConfig, out: Path, dump_matrix: bool, experiment: str = "solve") -> dict:
    """Run one solve and write ``metrics.json``, ``timings.json``, the manifest and matrices."""
    out.mkdir(parents=True, exist_ok=True)
    H = cfg.build_H()
    scfg = cfg.solver_cfg
    Hin = H if cfg.solver in ("alg4", "alg5") else (H.to_dense() if isinstance(H, BandedSymMatrix) else H)
    with _thread_limit():
        rep = solve(cfg.solver, Hin, scfg)
    hist = {k: v for k, v in rep.history.items() if k != "time"}
    bounds = _bounds(H, scfg, rep.P_dense()) if rep.converged else []
    metrics = {
        "solver": cfg.solver,
        "config": cfg.to_flat(),
        "termination": rep.termination,
        "iterations": rep.iterations,
        "history": hist,
        "energy": rep.energy.to_dict(),
        "bounds": bounds,
    }
    outputs = ["metrics.json", "timings.json", "hamiltonian.csv"]
    _write_json(out / "metrics.json", metrics)
    times = rep.history["time"]
    _write_json(out / "timings.json", {"per_iteration": times, "total": float(np.sum(times))})
    write_matrix(out / "hamiltonian.csv", H)
    if dump_matrix:
        write_matrix(out / "P.csv", rep.P)
        outputs.append("P.csv")
    _write_manifest(out, experiment, cfg, outputs)
    return {"report": rep, "metrics": metrics, "H": H}


def run_reference(cfg: ExperimentConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    H = cfg.build_H()
    Hd = H.to_dense() if isinstance(H, BandedSymMatrix) else H
    scfg = cfg.solver_cfg
    spec = eig_sym(Hd)
    if scfg.zero_temperature:
        P, mu = projector_density_matrix(Hd, scfg.N, spectrum=spec), None
    else:
        P, mu = fermi_dirac_density_matrix(Hd, scfg.beta, scfg.N, spectrum=spec)
    energy = evaluate(Hd, P, scfg.beta, math.inf, strict=False)
    _write_json(out / "reference.json", {"config": cfg.to_flat(), "mu": mu, "energy": energy.to_dict()})
    write_matrix(out / "P.csv", P)
    write_matrix(out / "hamiltonian.csv", H)
    _write_manifest(out, "reference", cfg, ["reference.json", "P.csv", "hamiltonian.csv"])
    return {"P": P, "mu": mu}


def _load_run(path: Path):
    P = read_matrix(path / "P.csv")
    H = read_matrix(path / "hamiltonian.csv")
    meta = {}
    for name in ("metrics.json", "reference.json"):
        if (path / name).exists():
            meta = json.loads((path / name).read_text())
            break
    cfg = ExperimentConfig.from_flat(meta["config"]) if "config" in meta else None
    return P, H, cfg


def _size(M) -> int:
    return M.n if isinstance(M, BandedSymMatrix) else np.shape(M)[0]


def run_compare(ref_dir: Path, band_dir: Path, out: Path) -> dict:
    P_ref, H, _ = _load_run(ref_dir)
    P_band, _, cfg = _load_run(band_dir)
    if cfg is None:
        raise LDMError(f"{band_dir} has no run metadata")
    if _size(P_ref) != _size(P_band):
        raise LDMError(f"reference has n={_size(P_ref)}, banded run has n={_size(P_band)}")
    s = cfg.solver_cfg
    rec = compare(P_ref, P_band, H, s.beta, s.eta, s.w)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "comparison.json", rec.to_dict())
    _write_table(out / "comparison.csv", [rec.to_dict()])
    return rec.to_dict()


TABLE_FIELDS = ["case", "beta", "w", "rel_trace_energy_err", "rel_total_energy_err", "rel_trunc_dist", "rel_frob_dist", "rel_band_dist"]


def _write_table(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=TABLE_FIELDS, extrasaction="ignore", lineterminator="\n")
        wr.writeheader()
        for row in rows:
            wr.writerow({k: _jsonable(row.get(k, "")) if k in ("case", "beta", "w") else repr(float(row[k])) for k in TABLE_FIELDS})


def _write_scaling(path: Path, res) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "t_mean", "t_median"])
        for n, tm, tmed in res.rows():
            wr.writerow([n, repr(tm), repr(tmed)])


def run_bench(kind: str, sizes: list[int], cfg: SolverConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with _thread_limit():
        res = scaling_study(kind, sizes, cfg)
    _write_scaling(out / f"scaling_{kind}.csv", res)
    summary = {"kind": kind, "sizes": res.sizes, "slope": res.slope, "ops": res.ops}
    _write_json(out / f"scaling_{kind}.json", summary)
    return summary


def run_reproduce(base: ExperimentConfig, out: Path, quick: bool = False) -> dict:
    """Table 1 rows, matrix dumps, bound checks and scaling tables in one go."""
    out.mkdir(parents=True, exist_ok=True)
    widths = (10, 15, 20)
    if quick:
        base = base.replace(**{"domain.n": 100, "domain.L": 25.0, "potential.N_at": 3, "N": 3, "tol_outer": 1e-4, "max_outer": 200})
        widths = (5, 10)
    rows, bounds = [], {}
    blocks = (("zeroT", math.inf, "kronig_penney"), ("finiteT", 1.0, "kronig_penney"), ("finiteT_free", 1.0, "free"))
    for label, beta, kind in blocks:
        dense_name, band_name = ("alg1", "alg4") if math.isinf(beta) else ("alg2", "alg5")
        cfg = base.replace(solver=dense_name, beta=beta, **{"potential.kind": kind})
        ref = run_solve(cfg, out / f"{label}_{dense_name}", dump_matrix=True, experiment="reproduce")
        bounds[f"{label}_{dense_name}"] = ref["metrics"]["bounds"]
        for w in widths:
            bcfg = cfg.replace(solver=band_name, w=w)
            band = run_solve(bcfg, out / f"{label}_{band_name}_w{w}", dump_matrix=True, experiment="reproduce")
            rec = compare(ref["report"].P, band["report"].P, ref["H"], beta, bcfg.solver_cfg.eta, w)
            rows.append({"case": label, **rec.to_dict()})
    _write_table(out / "table1.csv", rows)
    _write_json(out / "bounds.json", bounds)

    sizes = [100, 200, 400] if quick else [1000, 2000, 4000, 8000]
    dense_sizes = [50, 100, 200] if quick else [200, 400, 800, 1600]
    scaling = {}
    bench_cfg = base.solver_cfg.replace(w=5 if quick else 10)
    for kind in ("alg4", "et_cheby", "fd_cheby"):
        scaling[kind] = run_bench(kind, sizes, bench_cfg, out)["slope"]
    scaling["alg1"] = run_bench("alg1", dense_sizes, bench_cfg, out)["slope"]
    # slopes are timing data, so they live outside the deterministic files
    _write_json(out / "timings.json", {"scaling_slopes": scaling})
    _write_manifest(out, "reproduce", base, ["table1.csv", "bounds.json", "timings.json"])
    all_hold = all(b["holds"] for checks in bounds.values() for b in checks)
    return {"rows": rows, "bounds_hold": all_hold, "slopes": scaling}


def _experiment_config(args, with_solver: bool = True) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {"seed": args.seed}
    if with_solver and getattr(args, "solver", None):
        over["solver"] = args.solver
    if getattr(args, "hamiltonian", None):
        over["hamiltonian"] = args.hamiltonian
    for flat_key, attr in (("w", "w"), ("beta", "beta"), ("eta", "eta"), ("N", "N")):
        v = getattr(args, attr, None)
        if v is not None:
            over[flat_key] = v
    if "beta" not in over and "solver" in over:
        # pick a temperature that matches the requested solver
        s = over["solver"]
        if s in ("alg2", "alg5") and math.isinf(cfg.solver_cfg.beta):
            over["beta"] = 1.0
        elif s in ("alg1", "alg4") and not math.isinf(cfg.solver_cfg.beta):
            over["beta"] = math.inf
    return cfg.replace(**over)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldm", description="Localized density matrix solvers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver=True):
        sp.add_argument("--config", help="flat JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=42)
        if solver:
            sp.add_argument("--solver", choices=sorted(SOLVERS))
            sp.add_argument("--hamiltonian", help="matrix CSV to use instead of the model")
            sp.add_argument("--w", type=int)
            sp.add_argument("--beta", type=float)
            sp.add_argument("--eta", type=float)
            sp.add_argument("--N", type=int)

    common(sub.add_parser("build", help="write the model Hamiltonian and its spectrum summary"), solver=False)
    sp = sub.add_parser("solve", help="run one solver")
    common(sp)
    sp.add_argument("--dump-matrix", action="store_true", help="also write P.csv")
    common(sub.add_parser("reference", help="dense oracle density matrix"))
    sp = sub.add_parser("compare", help="compare a banded run with a reference run")
    sp.add_argument("ref_run")
    sp.add_argument("band_run")
    sp.add_argument("--out", default=".")
    sp = sub.add_parser("bench", help="per-iteration timing across sizes")
    common(sp, solver=False)
    sp.add_argument("--solver", choices=SCALING_KINDS, default="alg4")
    sp.add_argument("--sizes", default="1000,2000,4000,8000")
    sp.add_argument("--w", type=int, default=10)
    sp = sub.add_parser("reproduce", help="full experiment recipe")
    common(sp, solver=False)
    sp.add_argument("--quick", action="store_true", help="small sizes, for smoke testing")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    out = Path(args.out)
    try:
        if args.command == "build":
            cfg = _experiment_config(args)
            out.mkdir(parents=True, exist_ok=True)
            H = cfg.build_H()
            write_matrix(out / "hamiltonian.csv", H)
            summary = _spectrum_summary(H, cfg.solver_cfg.N)
            _write_json(out / "spectrum.json", summary)
            _write_manifest(out, "build", cfg, ["hamiltonian.csv", "spectrum.json"])
            print(json.dumps(_jsonable({k: summary.get(k) for k in ("lambda_N", "lambda_N1", "gap")})))
        elif args.command == "solve":
            res = run_solve(_experiment_config(args), out, args.dump_matrix)
            m = res["metrics"]
            print(f"{m['solver']}: {m['termination']} after {m['iterations']} iterations, E = {m['energy']['total']:.12g}")
        elif args.command == "reference":
            run_reference(_experiment_config(args), out)
        elif args.command == "compare":
            print(json.dumps(_jsonable(run_compare(Path(args.ref_run), Path(args.band_run), out))))
        elif args.command == "bench":
            # --solver names the timing target here, not the config's solver
            cfg = _experiment_config(args, with_solver=False).solver_cfg.replace(w=args.w)
            sizes = [int(s) for s in args.sizes.split(",")]
            res = run_bench(args.solver, sizes, cfg, out)
            print(f"{args.solver}: slope {res['slope']:.3f}")
        elif args.command == "reproduce":
            res = run_reproduce(_experiment_config(args), out, quick=args.quick)
            print(f"bounds hold: {res['bounds_hold']}; slopes: {res['slopes']}")
    except (LDMError, OSError, ValueError) as exc:
        print(f"ldm: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
