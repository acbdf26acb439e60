"""Command-line front end: predict, bootstrap, branch, verify, sweep.

Outputs are plain CSV and JSON written atomically (temp file + rename) so a
crashed run never leaves a half-written artifact, and deterministically:
floats are printed with 17 significant digits, JSON keys are sorted, and no
timestamps or environment data enter the files.  A flat ``key = value``
config file (with ``#`` comments) can hold any option; command-line flags
override it, and unknown keys are errors.

Exit codes: 0 success, 2 usage/config error, 3 inconclusive classification,
4 compute failure (partial artifacts are kept and flagged).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import bootstrap as bs
from .branch import Branch, ContinuationError, SolverConfig, continue_branch
from .estimates import (
    check_L2,
    check_crucial_integrals,
    check_fprime_integral,
    run_pointwise_suite,
)
from .families import FamilyDomainError, parse_family
from .radial import RadialGrid
from .stability import EigenIterationError, smallest_stability_eigenvalue

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_COMPUTE = 4


# ---------------------------------------------------------------------------
# formatting and atomic file output
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    """Round-trippable decimal rendering of a binary64."""
    return format(float(x), ".17g")


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_CONFIG_TYPES = {
    "family": str,
    "families": str,
    "N": int,
    "dims": str,
    "n": int,
    "m_max": float,
    "tol": float,
    "amplitude_step": float,
    "out": str,
    "jobs": int,
    "dump_fields": bool,
}


def _parse_config_file(path: str) -> dict:
    values: dict = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            typ = _CONFIG_TYPES[key]
            if typ is bool:
                if val.lower() not in ("true", "false", "0", "1"):
                    raise ValueError(f"{path}:{lineno}: bad boolean {val!r}")
                values[key] = val.lower() in ("true", "1")
            else:
                values[key] = typ(val)
    return values


@dataclass
class RunConfig:
    family: str = "exp"
    dim_N: int = 3
    n: int = 2048
    m_max: float = 6.0
    tol: float = 1e-10
    amplitude_step: float = 0.05
    out: str = "out"
    jobs: int = 1
    dump_fields: bool = False

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "N": self.dim_N,
            "n": self.n,
            "m_max": self.m_max,
            "tol": self.tol,
            "amplitude_step": self.amplitude_step,
            "out": self.out,
            "jobs": self.jobs,
            "dump_fields": self.dump_fields,
        }


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    """File values first, explicit flags second."""
    cfg = RunConfig()
    fileval = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    mapping = [
        ("family", "family"),
        ("N", "dim_N"),
        ("n", "n"),
        ("m_max", "m_max"),
        ("tol", "tol"),
        ("amplitude_step", "amplitude_step"),
        ("out", "out"),
        ("jobs", "jobs"),
        ("dump_fields", "dump_fields"),
    ]
    for key, attr in mapping:
        if key in fileval:
            setattr(cfg, attr, fileval[key])
    for key, attr in mapping:
        flag = getattr(args, attr, None)
        if flag is not None:
            setattr(cfg, attr, flag)
    return cfg


def _family_tag(spec: str) -> str:
    return spec.replace(":", "-").replace("=", "").replace(".", "_")


# ---------------------------------------------------------------------------
# branch / verify machinery shared by subcommands
# ---------------------------------------------------------------------------


def _solve_branch(cfg: RunConfig):
    family = parse_family(cfg.family)
    grid = RadialGrid(cfg.dim_N, cfg.n)
    solver = SolverConfig(newton_tol=cfg.tol, amplitude_step=cfg.amplitude_step)
    m_max = cfg.m_max
    if family.singular:
        # amplitudes the grid can still resolve; the fold sits far below
        m_max = min(m_max, 1.0 - 1e-4)
    branch = continue_branch(family, grid, m_max, solver)
    return family, grid, branch


def _branch_csv(family, branch: Branch) -> str:
    rows = ["m,lambda,u_center,max_u,mu1,residual_norm,newton_iters"]
    for pt in branch.points:
        mu1 = smallest_stability_eigenvalue(family, pt).mu1
        rows.append(
            ",".join(
                [
                    _fmt(pt.m),
                    _fmt(pt.lam),
                    _fmt(pt.u[0]),
                    _fmt(max(pt.u)),
                    _fmt(mu1),
                    _fmt(pt.residual_norm),
                    str(pt.newton_iters),
                ]
            )
        )
    return "\n".join(rows) + "\n"


def _branch_summary(cfg: RunConfig, branch: Branch, status: str = "ok") -> dict:
    return {
        "family": branch.family_spec or cfg.family,
        "N": cfg.dim_N,
        "n": cfg.n,
        "lambda_star_estimate": branch.lambda_star_estimate,
        "fold_detected": branch.fold_detected,
        "points": len(branch.points),
        "status": status,
        "config": cfg.as_dict(),
    }


def _field_csv(pt) -> str:
    rows = ["r,value"]
    for r, val in zip(pt.grid.r, pt.u):
        rows.append(f"{_fmt(r)},{_fmt(val)}")
    return "\n".join(rows) + "\n"


def _write_branch_artifacts(cfg: RunConfig, family, branch: Branch, status: str) -> dict:
    tag = f"{_family_tag(cfg.family)}_N{cfg.dim_N}"
    csv_path = os.path.join(cfg.out, f"branch_{tag}.csv")
    json_path = os.path.join(cfg.out, f"branch_{tag}.json")
    _write_atomic(csv_path, _branch_csv(family, branch))
    summary = _branch_summary(cfg, branch, status)
    _write_atomic(json_path, _json_text(summary))
    if cfg.dump_fields:
        for i, pt in enumerate(branch.points):
            _write_atomic(
                os.path.join(cfg.out, f"field_{tag}_{i:04d}.csv"), _field_csv(pt)
            )
        _write_atomic(
            os.path.join(cfg.out, f"grid_{tag}.json"),
            _json_text(branch.grid.json_header()),
        )
    return summary


def _estimate_rows(family, branch: Branch) -> tuple[str, bool]:
    rows = ["estimate,m,lambda,lhs,rhs,margin,satisfied"]
    all_ok = True
    for pt in branch.pre_fold_points:
        for rep in run_pointwise_suite(family, pt):
            rows.append(
                ",".join(
                    [
                        rep.name,
                        _fmt(rep.m),
                        _fmt(rep.lam),
                        _fmt(rep.lhs),
                        _fmt(rep.rhs),
                        _fmt(rep.margin),
                        str(rep.satisfied).lower(),
                    ]
                )
            )
            all_ok = all_ok and rep.satisfied
    return "\n".join(rows) + "\n", all_ok


def _suprema_summary(family, branch: Branch) -> dict:
    out: dict = {}
    entries = []
    if not family.singular:
        ratio, mass = check_crucial_integrals(family, branch)
        entries.extend([ratio, mass])
    try:
        entries.append(check_L2(family, branch))
    except ValueError:
        pass
    try:
        entries.append(check_fprime_integral(family, branch))
    except ValueError:
        pass
    for sup in entries:
        out[sup.name] = {"sup": sup.sup, "trend": sup.trend, "finite": sup.finite}
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_predict(args) -> int:
    try:
        family = parse_family(args.family)
        verdict = bs.predict_regularity(family, args.dim_N)
    except (FamilyDomainError, bs.RecursionDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = _json_text(verdict.as_dict())
    sys.stdout.write(text)
    if args.out:
        _write_atomic(args.out, text)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    try:
        params = bs.ExponentParams(args.dim_N, args.q, args.alpha, args.beta)
        trace = bs.run_bootstrap(params, max_steps=args.steps)
    except bs.RecursionDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    record = {
        "N": args.dim_N,
        "q0": args.q,
        "alpha": args.alpha,
        "beta": args.beta,
        "trace": trace.as_dict(),
    }
    text = _json_text(record)
    sys.stdout.write(text)
    if args.out:
        _write_atomic(args.out, text)
    return EXIT_INCONCLUSIVE if trace.classification == bs.INCONCLUSIVE else EXIT_OK


def _validate_run_config(cfg: RunConfig) -> None:
    """Fail fast on bad values before any compute starts."""
    parse_family(cfg.family)
    RadialGrid(cfg.dim_N, cfg.n)
    SolverConfig(newton_tol=cfg.tol, amplitude_step=cfg.amplitude_step)
    if cfg.m_max <= 0.0:
        raise ValueError("m_max must be positive")
    if cfg.jobs < 1:
        raise ValueError("jobs must be >= 1")


def cmd_branch(args) -> int:
    try:
        cfg = _resolve_config(args)
        _validate_run_config(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        family, grid, branch = _solve_branch(cfg)
        summary = _write_branch_artifacts(cfg, family, branch, status="ok")
    except ContinuationError as exc:
        family = parse_family(cfg.family)
        if exc.partial is not None and exc.partial.points:
            _write_branch_artifacts(cfg, family, exc.partial, status="partial")
        print(f"compute failure: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except EigenIterationError as exc:
        print(f"compute failure: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    sys.stdout.write(_json_text(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        cfg = _resolve_config(args)
        _validate_run_config(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        family, grid, branch = _solve_branch(cfg)
    except (ContinuationError, EigenIterationError) as exc:
        print(f"compute failure: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    tag = f"{_family_tag(cfg.family)}_N{cfg.dim_N}"
    csv_text, all_ok = _estimate_rows(family, branch)
    _write_atomic(os.path.join(cfg.out, f"estimates_{tag}.csv"), csv_text)
    verdict = {
        "family": cfg.family,
        "N": cfg.dim_N,
        "n": cfg.n,
        "lambda_star_estimate": branch.lambda_star_estimate,
        "fold_detected": branch.fold_detected,
        "pre_fold_points": len(branch.pre_fold_points),
        "pointwise_all_satisfied": all_ok,
        "suprema": _suprema_summary(family, branch),
        "config": cfg.as_dict(),
    }
    _write_atomic(os.path.join(cfg.out, f"verify_{tag}.json"), _json_text(verdict))
    sys.stdout.write(_json_text(verdict))
    return EXIT_OK


def _parse_dims(spec: str) -> list[int]:
    dims: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, hi = part.partition("..")
            dims.extend(range(int(lo), int(hi) + 1))
        elif part:
            dims.append(int(part))
    if not dims:
        raise ValueError(f"empty dimension list {spec!r}")
    return sorted(set(dims))


def _sweep_cell(payload: dict) -> dict:
    """One (family, N) job; run in a worker process."""
    cfg = RunConfig(**payload)
    family = parse_family(cfg.family)
    verdict = bs.predict_regularity(family, cfg.dim_N)
    cell = {
        "family": cfg.family,
        "N": cfg.dim_N,
        "verdict": verdict.verdict,
        "rule": verdict.rule,
    }
    family = parse_family(cfg.family)
    status = "ok"
    try:
        family, grid, branch = _solve_branch(cfg)
    except ContinuationError as exc:
        # a partial branch that already contains the fold still answers the
        # sweep's questions; only a foldless failure voids the cell
        if exc.partial is None or not exc.partial.fold_detected:
            cell.update(status="compute-failure", lambda_star="nan",
                        fold_detected=False, estimates_ok=False)
            return cell
        branch = exc.partial
        status = "partial"
    except EigenIterationError:
        cell.update(status="compute-failure", lambda_star="nan", fold_detected=False,
                    estimates_ok=False)
        return cell
    _write_branch_artifacts(cfg, family, branch, status=status)
    _, all_ok = _estimate_rows(family, branch)
    cell.update(
        status=status,
        lambda_star=branch.lambda_star_estimate,
        fold_detected=branch.fold_detected,
        estimates_ok=all_ok,
    )
    return cell


def cmd_sweep(args) -> int:
    try:
        cfg = _resolve_config(args)
        file_cfg = _parse_config_file(args.config) if args.config else {}
        families_spec = args.families or file_cfg.get("families")
        dims_spec = args.dims or file_cfg.get("dims")
        if not families_spec or not dims_spec:
            raise ValueError("sweep needs --families and --dims")
        fams = [f.strip() for f in families_spec.split(",") if f.strip()]
        for f in fams:
            parse_family(f)
        dims = _parse_dims(dims_spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payloads = [
        {
            "family": fam,
            "dim_N": N,
            "n": cfg.n,
            "m_max": cfg.m_max,
            "tol": cfg.tol,
            "amplitude_step": cfg.amplitude_step,
            "out": cfg.out,
            "jobs": 1,
            "dump_fields": False,
        }
        for fam in fams
        for N in dims
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            cells = list(pool.map(_sweep_cell, payloads))
    else:
        cells = [_sweep_cell(p) for p in payloads]
    cells.sort(key=lambda c: (c["family"], c["N"]))
    rows = ["family,N,status,lambda_star,fold_detected,verdict,rule,estimates_ok"]
    failures = 0
    for c in cells:
        if c["status"] != "ok":
            failures += 1
        lam = c["lambda_star"]
        rows.append(
            ",".join(
                [
                    c["family"],
                    str(c["N"]),
                    c["status"],
                    lam if isinstance(lam, str) else _fmt(lam),
                    str(c["fold_detected"]).lower(),
                    c["verdict"],
                    c["rule"],
                    str(c["estimates_ok"]).lower(),
                ]
            )
        )
    text = "\n".join(rows) + "\n"
    _write_atomic(os.path.join(cfg.out, "sweep.csv"), text)
    sys.stdout.write(text)
    return EXIT_COMPUTE if failures else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--family", dest="family", default=None,
                     help="exp | power:p=<real> | mems:p=<real>")
    sub.add_argument("--N", dest="dim_N", type=int, default=None, help="space dimension")
    sub.add_argument("--n", dest="n", type=int, default=None, help="interior grid nodes")
    sub.add_argument("--m-max", dest="m_max", type=float, default=None,
                     help="largest amplitude to continue to")
    sub.add_argument("--tol", dest="tol", type=float, default=None,
                     help="Newton residual tolerance")
    sub.add_argument("--amplitude-step", dest="amplitude_step", type=float, default=None)
    sub.add_argument("--out", dest="out", default=None, help="output directory")
    sub.add_argument("--jobs", dest="jobs", type=int, default=None, help="worker processes")
    sub.add_argument("--config", default=None, help="flat key = value config file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navierlab",
        description="Minimal branches, stability and estimate certification "
        "for the fourth-order eigenvalue problem with hinged boundary conditions.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("predict", help="regularity verdict for (family, N)")
    p.add_argument("--family", required=True)
    p.add_argument("--N", dest="dim_N", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("bootstrap", help="run the exponent recursion")
    p.add_argument("--N", dest="dim_N", type=int, required=True)
    p.add_argument("--q", type=float, required=True, help="starting exponent q0 >= 1")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bootstrap)

    p = subs.add_parser("branch", help="continue the minimal branch, write CSV + JSON")
    _add_run_flags(p)
    p.add_argument("--dump-fields", dest="dump_fields", action="store_const", const=True,
                   default=None, help="write one CSV per solved profile")
    p.set_defaults(func=cmd_branch)

    p = subs.add_parser("verify", help="certify the estimates along a branch")
    _add_run_flags(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("sweep", help="branch + verify over families x dimensions")
    _add_run_flags(p)
    p.add_argument("--families", default=None, help="comma-separated family specs")
    p.add_argument("--dims", default=None, help="e.g. 3..8 or 3,5,8")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
