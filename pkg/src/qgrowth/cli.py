"""Command-line front end.

``qgrowth [--out DIR] [--tol X] [--seed N] [--parallel] COMMAND ...``

Commands: ``verify``, ``lorentz``, ``morrey``, ``decay``, ``membership``,
``suite``.  Each command writes a JSON report (plus a CSV table where one
exists) into ``--out``.  Exit status: 0 on success, 1 when a verification
fails, 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import field_kernel as fk
from . import pde_residual as pr
from . import regularity_lab as rl
from .bumps import Bump
from .errors import QGrowthError
from .rearrange import (decreasing_rearrangement, lorentz_norm, powerlaw_lorentz_norm,
                        sample_radial)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

FAMILIES = {"loglog4": fk.LOGLOG4D, "sinlog2nd": fk.SINLOG_SECOND, "sinlog4th": fk.SINLOG_FOURTH}
SYSTEM_OF = {"loglog4": pr.FOURTH_ORDER_LOGLOG, "sinlog2nd": pr.SECOND_ORDER_SPHERE,
             "sinlog4th": pr.FOURTH_ORDER_SINLOG}
DEFAULT_TOL = {"verify": 1e-8, "weak": 1e-6}


class ConfigError(Exception):
    """Invalid command parameters (exit status 2)."""


@dataclass
class JobResult:
    command: str
    ok: bool
    report: dict
    files: dict[str, str] = dc_field(default_factory=dict)   # name -> text
    message: str = ""


# ---------------------------------------------------------------------------
# helpers


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _float(v, name: str) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {v!r}") from None


def _field(params: dict) -> fk.FieldSpec:
    """Field from ``family``/``n`` (and ``alpha`` for power laws)."""
    family = params.get("family")
    n = int(params.get("n", 4))
    try:
        if family in FAMILIES:
            if family == "loglog4" and n != 4:
                raise ConfigError("loglog4 is defined for n = 4 only")
            if family == "sinlog2nd" and n < 3:
                raise ConfigError("sinlog2nd needs n >= 3")
            if family == "sinlog4th" and n < 5:
                raise ConfigError("sinlog4th needs n >= 5")
            return fk.catalog_field(FAMILIES[family], n)
        if family == "powerlaw":
            return fk.power_law(_float(params.get("alpha", 1.0), "alpha"), n)
        if family == "linear":
            return fk.linear_field(n)
    except QGrowthError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown family {family!r}")


def _check_keys(params: dict, allowed: set[str], command: str):
    extra = set(params) - allowed
    if extra:
        raise ConfigError(f"{command}: unknown parameters {sorted(extra)}")


def _radii(spec: str | None) -> np.ndarray:
    """``lo:hi:count`` log-spaced radii (default ``1e-6:e^-2:100``)."""
    if spec is None:
        return np.geomspace(1e-6, fk.OMEGA_RADIUS, 100)
    try:
        lo, hi, cnt = spec.split(":")
        return np.geomspace(float(lo), float(hi), int(cnt))
    except ValueError:
        raise ConfigError(f"radii must look like lo:hi:count, got {spec!r}") from None


# ---------------------------------------------------------------------------
# commands (dict in, JobResult out)


def cmd_verify(params: dict, tol: float | None, seed: int) -> JobResult:
    _check_keys(params, {"family", "n", "radii", "weak"}, "verify")
    family = params.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"verify: family must be one of {sorted(FAMILIES)}")
    f = _field(params)
    system = pr.SYSTEMS[SYSTEM_OF[family]]
    radii = _radii(params.get("radii"))
    if radii.max() > fk.OMEGA_RADIUS * (1 + 1e-12):
        raise ConfigError("radii must lie in (0, e^-2]")
    tol = DEFAULT_TOL["verify"] if tol is None else tol
    rep = pr.pointwise_residual(system, f, radii)
    report = rep.to_json()
    ok = rep.max_rel <= tol
    if params.get("weak", True):
        weak = []
        for b in _weak_bumps(f.n):
            w = pr.weak_residual(f, b, system.order, 1e-8)
            weak.append({"bump": b.to_json(), **w.to_json()})
            ok = ok and w.relative <= DEFAULT_TOL["weak"]
        report["weak"] = weak
    report["tol"] = tol
    report["pass"] = ok
    stem = f"verify_{family}_n{f.n}"
    return JobResult("verify", ok, report, {f"{stem}.json": dumps(report), f"{stem}.csv": rep.to_csv()},
                     f"{family} n={f.n}: max_rel={rep.max_rel:.3e}")


def _weak_bumps(n: int) -> list[Bump]:
    e1 = (0.06,) + (0.0,) * (n - 1)
    mixed = (0.03, 0.02) + (0.0,) * (n - 2)
    return [Bump(n, math.exp(-3)), Bump(n, 0.05, center=e1), Bump(n, 0.05, center=mixed)]


def _parse_function(spec: str) -> tuple[str, dict]:
    name, _, rest = spec.partition(":")
    args = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        args[k.strip()] = _float(v, k)
    return name, args


def cmd_lorentz(params: dict, tol: float | None, seed: int) -> JobResult:
    _check_keys(params, {"function", "n", "p", "q", "radius", "cells"}, "lorentz")
    name, args = _parse_function(str(params.get("function", "powerlaw:s=2")))
    if name != "powerlaw" or "s" not in args:
        raise ConfigError("function must look like powerlaw:s=<value>[,c=<value>]")
    n = int(params.get("n", 4))
    p = _float(params.get("p", 2), "p")
    q = _float(params.get("q", "inf"), "q")
    radius = _float(params.get("radius", 1.0), "radius")
    cells = int(params.get("cells", 2**14))
    s, c = args["s"], args.get("c", 1.0)
    if not 0 < s < n:
        raise ConfigError("need 0 < s < n")
    try:
        exact = powerlaw_lorentz_norm(n, s, p, q, radius=radius, coefficient=c)
        data = sample_radial(lambda r: c * r ** (-s), n, radius, cells=cells)
        emp = lorentz_norm(decreasing_rearrangement(data), p, q)
    except (QGrowthError, IndexError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = {"function": f"powerlaw:s={s:g},c={c:g}", "n": n, "p": p, "q": q, "radius": radius,
              "empirical": emp.to_json(), "exact": exact.to_json()}
    ok = True
    if not exact.divergent and math.isfinite(exact.value) and exact.value > 0:
        report["relative_difference"] = abs(emp.value - exact.value) / exact.value
        ok = report["relative_difference"] <= (tol if tol is not None else 1e-2)
    report["pass"] = ok
    stem = f"lorentz_n{n}_s{s:g}_p{p:g}_q{q:g}"
    return JobResult("lorentz", ok, report, {f"{stem}.json": dumps(report), f"{stem}.csv":
                     decreasing_rearrangement(data).to_csv()}, f"empirical {emp.value:.8g}")


def _scan_config(params: dict, norm: tuple, seed: int, default_r0: float) -> rl.DecayScanConfig:
    center = params.get("center")
    if isinstance(center, str):
        center = tuple(_float(v, "center") for v in center.split(","))
    try:
        return rl.DecayScanConfig(tuple(center) if center else None,
                                  _float(params.get("r0", default_r0), "r0"),
                                  _float(params.get("theta", 0.5), "theta"),
                                  int(params.get("count", 8)), norm, params.get("fit", "loglog"),
                                  int(params.get("samples", 2**14)), seed,
                                  bool(params.get("hessian", False)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


_SCAN_KEYS = {"family", "n", "alpha", "center", "r0", "theta", "count", "fit", "samples"}


def _default_r0(f: fk.FieldSpec) -> float:
    return f.r_max if f.r_max is not None else 1.0


def cmd_morrey(params: dict, tol: float | None, seed: int) -> JobResult:
    _check_keys(params, _SCAN_KEYS | {"p"}, "morrey")
    f = _field(params)
    p = _float(params.get("p", 2), "p")
    cfg = _scan_config(params, ("morrey", p), seed, _default_r0(f))
    rep = rl.morrey_scan(f, cfg, tol if tol is not None else 1e-8)
    report = rep.to_json()
    stem = f"morrey_{params.get('family')}_n{f.n}_p{p:g}"
    return JobResult("morrey", True, report, {f"{stem}.json": dumps(report), f"{stem}.csv": rep.to_csv()})


def cmd_decay(params: dict, tol: float | None, seed: int) -> JobResult:
    _check_keys(params, _SCAN_KEYS | {"p", "q", "hessian", "quantity"}, "decay")
    f = _field(params)
    quantity = params.get("quantity", "lorentz")
    if quantity == "oscillation":
        cfg = _scan_config(params, ("oscillation",), seed, _default_r0(f))
        rep = rl.oscillation_scan(f, cfg.center, cfg.radii)
    elif quantity == "lorentz":
        p = _float(params.get("p", f.n), "p")
        q = _float(params.get("q", "inf"), "q")
        cfg = _scan_config(params, ("lorentz", p, q), seed, _default_r0(f))
        try:
            rep = rl.lorentz_ball_decay(f, cfg)
        except QGrowthError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raise ConfigError(f"decay: quantity must be lorentz or oscillation, got {quantity!r}")
    report = rep.to_json()
    stem = f"decay_{quantity}_{params.get('family')}_n{f.n}"
    return JobResult("decay", True, report, {f"{stem}.json": dumps(report), f"{stem}.csv": rep.to_csv()})


def _p_grid(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [_float(x, "p-grid") for x in v]
    return [_float(x, "p-grid") for x in str(v).split(",") if x.strip()]


def cmd_membership(params: dict, tol: float | None, seed: int) -> JobResult:
    _check_keys(params, {"family", "n", "alpha", "k", "p_grid"}, "membership")
    f = _field(params)
    k = int(params.get("k", 1))
    if k not in (1, 2):
        raise ConfigError("k must be 1 or 2")
    grid = _p_grid(params.get("p_grid", "2"))
    rows = [rl.sobolev_membership(f, k, p, tol if tol is not None else 1e-8).to_json() for p in grid]
    report = {"family": f.family, "n": f.n, "k": k, "table": rows}
    stem = f"membership_{params.get('family')}_n{f.n}_k{k}"
    csv_text = "p,verdict\n" + "".join(f"{r['space']['p']!r},{r['verdict']}\n" for r in rows)
    return JobResult("membership", True, report, {f"{stem}.json": dumps(report), f"{stem}.csv": csv_text},
                     " ".join(r["verdict"] for r in rows))


COMMANDS: dict[str, Callable[[dict, float | None, int], JobResult]] = {
    "verify": cmd_verify, "lorentz": cmd_lorentz, "morrey": cmd_morrey, "decay": cmd_decay,
    "membership": cmd_membership,
}


# ---------------------------------------------------------------------------
# suite


@dataclass
class SuiteConfig:
    jobs: list[dict]
    tolerances: dict[str, float]
    output_dir: str | None
    seed: int

    @classmethod
    def from_json(cls, data: dict) -> "SuiteConfig":
        if not isinstance(data, dict):
            raise ConfigError("suite config must be a JSON object")
        jobs = data.get("jobs", [])
        if not isinstance(jobs, list):
            raise ConfigError("jobs must be a list")
        for j, job in enumerate(jobs):
            if not isinstance(job, dict) or job.get("command") not in COMMANDS:
                raise ConfigError(f"job {j}: unknown command {job.get('command') if isinstance(job, dict) else job!r}")
            if not isinstance(job.get("parameters", {}), dict):
                raise ConfigError(f"job {j}: parameters must be an object")
        tols = data.get("tolerances", {})
        if not isinstance(tols, dict):
            raise ConfigError("tolerances must be an object")
        return cls(jobs, {str(k): float(v) for k, v in tols.items()}, data.get("output_dir"),
                   int(data.get("seed", 0)))


def _run_job(args: tuple) -> tuple[int, str, dict, dict, float, str]:
    index, command, params, tol, seed = args
    start = time.perf_counter()
    try:
        res = COMMANDS[command](dict(params), tol, seed)
        status = "pass" if res.ok else "fail"
        return index, status, res.files, res.report, time.perf_counter() - start, res.message
    except ConfigError as exc:
        return index, "config-error", {}, {}, time.perf_counter() - start, str(exc)
    except Exception as exc:   # a failing job must not abort the rest of the suite
        return index, "error", {}, {}, time.perf_counter() - start, f"{type(exc).__name__}: {exc}"


def run_suite(cfg: SuiteConfig, out: Path, tol: float | None, seed: int | None,
              parallel: bool = False) -> int:
    seed = cfg.seed if seed is None else seed
    tasks = []
    for i, job in enumerate(cfg.jobs):
        command = job["command"]
        t = cfg.tolerances.get(command, cfg.tolerances.get("default", tol))
        tasks.append((i, command, job.get("parameters", {}), t, seed))
    if parallel and len(tasks) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_job, tasks))
    else:
        results = [_run_job(t) for t in tasks]
    out.mkdir(parents=True, exist_ok=True)
    index, timing = [], []
    for (i, command, params, _, _), (_, status, files, _, wall, msg) in zip(tasks, results):
        names = []
        for name, text in sorted(files.items()):
            fname = f"job{i:03d}_{name}"
            (out / fname).write_text(text)
            names.append(fname)
        index.append({"index": i, "command": command, "parameters": params, "status": status,
                      "files": names, "message": msg})
        timing.append({"index": i, "wall_seconds": wall})
    (out / "index.json").write_text(dumps({"seed": seed, "jobs": index}))
    (out / "timing.json").write_text(dumps({"jobs": timing}))
    return EXIT_OK if all(r[1] == "pass" for r in results) else EXIT_FAIL


# ---------------------------------------------------------------------------
# argparse


def _global_flags(p: argparse.ArgumentParser, defaults: bool):
    sup = None if defaults else argparse.SUPPRESS
    p.add_argument("--out", default="." if defaults else sup, help="output directory")
    p.add_argument("--tol", type=float, default=sup, help="tolerance override")
    p.add_argument("--seed", type=int, default=0 if defaults else sup, help="seed for sampled pipelines")
    p.add_argument("--parallel", action="store_true", default=False if defaults else sup,
                   help="run suite jobs concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgrowth", description=__doc__.splitlines()[0])
    _global_flags(parser, True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, False)
        return sp

    v = add("verify", "pointwise and weak residuals of a model system")
    v.add_argument("--family", required=True, choices=sorted(FAMILIES))
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--radii", help="lo:hi:count (log-spaced)")
    v.add_argument("--no-weak", dest="weak", action="store_false")

    lo = add("lorentz", "Lorentz norm of a power law, empirical and exact")
    lo.add_argument("--function", default="powerlaw:s=2")
    lo.add_argument("--n", type=int, default=4)
    lo.add_argument("--p", type=float, default=2.0)
    lo.add_argument("--q", default="inf")
    lo.add_argument("--radius", type=float, default=1.0)
    lo.add_argument("--cells", type=int, default=2**14)

    for name, help_ in (("morrey", "Morrey subnorm scan"), ("decay", "Lorentz or oscillation decay scan")):
        sp = add(name, help_)
        sp.add_argument("--family", required=True)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--center", help="comma-separated coordinates")
        sp.add_argument("--r0", type=float)
        sp.add_argument("--theta", type=float, default=0.5)
        sp.add_argument("--count", type=int, default=8)
        sp.add_argument("--fit", choices=["none", "loglog"], default="loglog")
        sp.add_argument("--samples", type=int, default=2**14)
        if name == "morrey":
            sp.add_argument("--p", type=float, default=2.0)
        else:
            sp.add_argument("--p", type=float)
            sp.add_argument("--q", default="inf")
            sp.add_argument("--hessian", action="store_true")
            sp.add_argument("--quantity", choices=["lorentz", "oscillation"], default="lorentz")

    m = add("membership", "Sobolev membership table")
    m.add_argument("--family", required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--alpha", type=float)
    m.add_argument("--k", type=int, default=1)
    m.add_argument("--p-grid", dest="p_grid", default="2")

    s = add("suite", "run a JSON suite configuration")
    s.add_argument("--config", required=True)
    return parser


_GLOBAL = {"out", "tol", "seed", "parallel", "command"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = Path(ns.out)
    try:
        if ns.command == "suite":
            try:
                data = json.loads(Path(ns.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read suite config: {exc}") from exc
            cfg = SuiteConfig.from_json(data)
            target = Path(cfg.output_dir) if cfg.output_dir and ns.out == "." else out
            code = run_suite(cfg, target, getattr(ns, "tol", None), ns.seed if ns.seed else None,
                             ns.parallel)
            print(f"suite: {len(cfg.jobs)} jobs, exit {code}")
            return code
        params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL and v is not None}
        res = COMMANDS[ns.command](params, getattr(ns, "tol", None), ns.seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(res.files.items()):
        (out / name).write_text(text)
    print(f"{res.command}: {'pass' if res.ok else 'FAIL'} {res.message}".rstrip())
    return EXIT_OK if res.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
