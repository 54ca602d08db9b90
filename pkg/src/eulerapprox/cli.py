"""Experiment runner: approximate / refine / check-hypothesis / zero-scan / torus / report.

Configuration is flat ``key = value`` text; every flag mirrors a config key
and command-line values win.  Each run writes a manifest echoing the full
configuration plus seed and version, so pointing --config at a previous
manifest replays the run.

Exit codes: 0 success, 2 stall, 3 invalid config, 4 hypothesis failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import Circle, fit_c0, min_modulus, rouche_check, zero_count
from .approx import (
    ApproximationProblem,
    ApproximationStall,
    InvalidProblem,
    RefineStall,
    _approximate_impl,
    refine_sequence,
)
from .factors import PhaseAssignment, load_custom_spec, partial_product_grid, zeta_spec, dirichlet_spec
from .primes import cached_primes_up_to
from .torus import RNG_ALGORITHM, ball_volume_mc, equidistribution_test, slab_bound_check

CONFIG_KEYS = {
    "spec": "zeta",
    "target": "exp:0.1",
    "sigma0": 0.75,
    "radius": 0.02,
    "eps": 0.1,
    "y": 2.0,
    "gamma": 2.0,
    "lam": 0.01,
    "delta": 0.01,
    "t0": 0.0,
    "pmax": 100_000,
    "phase_grid": "quarter",
    "seed": 0,
    "stages": 3,
    "workers": 0,
    "out": "run",
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(CONFIG_KEYS))

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key: str, raw: str) -> None:
        if key not in CONFIG_KEYS:
            raise KeyError(f"unknown config key {key!r}")
        default = CONFIG_KEYS[key]
        if isinstance(default, bool):
            self.values[key] = raw.lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            self.values[key] = int(float(raw))
        elif isinstance(default, float):
            self.values[key] = float(raw)
        else:
            self.values[key] = raw

    def manifest_text(self) -> str:
        lines = [f"version = {__version__}", f"rng = {RNG_ALGORITHM}"]
        for k in sorted(self.values):
            lines.append(f"{k} = {self.values[k]}")
        return "\n".join(lines) + "\n"


def load_config(path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line or "=" not in line:
                    continue
                k, v = (t.strip() for t in line.split("=", 1))
                if k in ("version", "rng"):
                    continue
                cfg.set(k, v)
    for k, v in overrides.items():
        if v is not None:
            cfg.set(k, str(v))
    return cfg


def build_spec(cfg: RunConfig):
    name = cfg["spec"]
    if name == "zeta":
        return zeta_spec()
    if name == "chi4":
        return dirichlet_spec(4, [0, 1, 0, -1])
    if name.startswith("custom:"):
        return load_custom_spec(name.split(":", 1)[1])
    raise InvalidProblem(f"unknown spec {name!r} (use zeta, chi4, or custom:<path>)")


def build_target(cfg: RunConfig):
    t = cfg["target"]
    if t == "one":
        return lambda s: np.ones_like(np.asarray(s, dtype=complex))
    if t.startswith("exp:"):
        a = float(t.split(":", 1)[1])
        return lambda s: np.exp(a * np.asarray(s, dtype=complex))
    if t.startswith("product:"):
        spec = build_spec(cfg)
        theta = read_phases(t.split(":", 1)[1])
        pa = PhaseAssignment(theta, t0=cfg["t0"])
        plist = sorted(theta)
        sigma0 = cfg["sigma0"]
        return lambda s: partial_product_grid(spec, np.asarray(s, dtype=complex) + sigma0,
                                              plist, pa)
    raise InvalidProblem(f"unknown target {t!r} (use one, exp:<a>, product:<phases file>)")


def read_phases(path: str) -> dict[int, float]:
    theta = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 2:
                theta[int(parts[0])] = float(parts[1])
    return theta


def build_problem(cfg: RunConfig) -> ApproximationProblem:
    return ApproximationProblem(
        spec=build_spec(cfg), target=build_target(cfg),
        sigma0=cfg["sigma0"], r=cfg["radius"], eps=cfg["eps"], y=cfg["y"],
        gamma_c=cfg["gamma"], lam=cfg["lam"], delta=cfg["delta"], t0=cfg["t0"],
        p_max=cfg["pmax"], seed=cfg["seed"], phase_mode=cfg["phase_grid"])


def _write(outdir: str, name: str, text: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, name), "w") as fh:
        fh.write(text)


def cmd_approximate(cfg: RunConfig) -> int:
    problem = build_problem(cfg)
    problem.validate()
    out = cfg["out"]
    _write(out, "manifest.txt", cfg.manifest_text())
    result = _approximate_impl(problem)
    _write(out, "phases.txt", result.phases_text())
    _write(out, "trace.txt", result.trace_text())
    _write(out, "heatmap.txt", result.survey.heatmap_text())
    status = "success" if result.success else "stall"
    _write(out, "report.txt",
           f"status {status}\nmax_error {result.max_error!r}\n"
           f"argmax {result.argmax.real!r} {result.argmax.imag!r}\n"
           f"primes {len(result.primes)}\nresidual_norm {result.residual_norm!r}\n"
           f"tail_bound {result.tail_bound!r}\n"
           f"contraction_deviation {result.contraction_deviation!r}\n")
    print(f"{status}: surveyed error {result.max_error:.6g} over {len(result.primes)} primes")
    return 0 if result.success else 2


def cmd_refine(cfg: RunConfig) -> int:
    problem = build_problem(cfg)
    problem.validate()
    out = cfg["out"]
    _write(out, "manifest.txt", cfg.manifest_text())
    try:
        stages = refine_sequence(problem, stages=cfg["stages"])
    except RefineStall as exc:
        _write(out, "report.txt", f"status stall\nreason {exc}\n")
        print(f"stall: {exc}")
        return 2
    lines = ["stage y m_k core_error error bound draws"]
    for st in stages:
        lines.append(f"{st.stage} {st.y!r} {st.m_k} {st.core_error!r} {st.error!r} "
                     f"{st.schedule_bound!r} {st.draws_used}")
    _write(out, "report.txt", "status success\n" + "\n".join(lines) + "\n")
    last = stages[-1]
    _write(out, "phases.txt",
           "\n".join(f"{p} {last.phases.theta[p]!r}" for p in sorted(last.phases.theta)) + "\n")
    _write(out, "trace.txt", "\n".join(f"{s.stage} {s.error!r}" for s in stages) + "\n")
    print(f"success: {len(stages)} stages, final error {last.error:.6g}")
    return 0


def cmd_check_hypothesis(cfg: RunConfig, h_grid: str, cache: str | None) -> int:
    spec = build_spec(cfg)
    parts = h_grid.split(":")
    if len(parts) != 3:
        raise InvalidProblem("h grid must be lo:hi:count")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    hs = list(np.exp(np.linspace(math.log(lo), math.log(hi), count)))
    if cache:
        cached_primes_up_to(int(hi * 2), cache_path=cache)
    report = fit_c0(spec, cfg["lam"], hs)
    out = cfg["out"]
    _write(out, "manifest.txt", cfg.manifest_text())
    _write(out, "report.txt", report.to_text())
    ok = report.all_pass() and report.c0 > 0
    print(f"hypothesis {'holds' if ok else 'fails'}: c0 = {report.c0!r}"
          + (f", first failure at h = {report.first_failure}" if report.first_failure else ""))
    return 0 if ok else 4


def cmd_zero_scan(cfg: RunConfig, center: complex, cradius: float, samples: int,
                  compare_n: int | None, phases_path: str | None) -> int:
    spec = build_spec(cfg)
    theta = read_phases(phases_path) if phases_path else {}
    from .primes import primes_up_to

    plist = [int(p) for p in primes_up_to(cfg["pmax"])]
    pa = PhaseAssignment({p: theta.get(p, 0.0) for p in plist}, t0=cfg["t0"])

    def f(s):
        return partial_product_grid(spec, np.asarray(s, dtype=complex), plist, pa)

    contour = Circle(center, cradius)
    count = zero_count(f, contour, quadrature_n=samples)
    m = min_modulus(f, contour, samples=max(64, samples))
    lines = [f"zero_count {count}", f"min_modulus {m!r}"]
    if compare_n is not None:
        qlist = [p for p in plist if p <= compare_n]

        def g(s):
            return partial_product_grid(spec, np.asarray(s, dtype=complex), qlist, pa)

        rr = rouche_check(f, g, contour, samples=max(64, samples))
        lines += [f"rouche_pass {int(rr.passed)}", f"rouche_margin {rr.margin!r}",
                  f"zeros_truncated {rr.zeros_g}"]
    out = cfg["out"]
    _write(out, "manifest.txt", cfg.manifest_text())
    _write(out, "report.txt", "\n".join(lines) + "\n")
    print("; ".join(lines))
    return 0


def cmd_torus(cfg: RunConfig, n: int, r: float, eps_slab: float, samples: int) -> int:
    est, half = ball_volume_mc(n, r, samples, seed=cfg["seed"])
    slab = slab_bound_check(n, r, eps_slab, samples, seed=cfg["seed"])
    eq = equidistribution_test(t_max=10_000.0, n=min(n, 8), seed=cfg["seed"])
    lines = [
        f"N {n} r {r!r} volume {est!r} half_width {half!r}",
        slab.to_text().strip(),
        f"discrepancy_coordinate {eq.max_coordinate!r} pairwise {eq.max_pairwise!r}",
    ]
    out = cfg["out"]
    _write(out, "manifest.txt", cfg.manifest_text())
    _write(out, "report.txt", "\n".join(lines) + "\n")
    print("; ".join(lines))
    return 0


def cmd_report(run_dir: str) -> int:
    for name in ("manifest.txt", "report.txt"):
        path = os.path.join(run_dir, name)
        if os.path.exists(path):
            print(f"--- {name} ---")
            with open(path) as fh:
                sys.stdout.write(fh.read())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="eulerapprox", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value config file (or a prior manifest)")
        for key, default in CONFIG_KEYS.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None,
                           help=f"config key {key} (default {default})")

    p_appr = sub.add_parser("approximate", help="greedy disc approximation run")
    add_common(p_appr)
    p_ref = sub.add_parser("refine", help="doubling-floor schedule run")
    add_common(p_ref)
    p_hyp = sub.add_parser("check-hypothesis", help="short-interval sum report")
    add_common(p_hyp)
    p_hyp.add_argument("--h-grid", default="1e4:1e6:20", help="lo:hi:count, log spaced")
    p_hyp.add_argument("--prime-cache", default=None, help="binary prime cache path")
    p_zero = sub.add_parser("zero-scan", help="winding-number zero count on a circle")
    add_common(p_zero)
    p_zero.add_argument("--center-re", type=float, default=None)
    p_zero.add_argument("--center-im", type=float, default=0.0)
    p_zero.add_argument("--cradius", type=float, default=None)
    p_zero.add_argument("--samples", type=int, default=512)
    p_zero.add_argument("--compare-n", type=int, default=None,
                        help="also run the dominance check against the product truncated here")
    p_zero.add_argument("--phases", default=None, help="phases file for the product twists")
    p_tor = sub.add_parser("torus", help="volume, slab, and equidistribution checks")
    add_common(p_tor)
    p_tor.add_argument("--N", type=int, default=4)
    p_tor.add_argument("--r", type=float, default=0.8)
    p_tor.add_argument("--eps-slab", type=float, default=0.05)
    p_tor.add_argument("--samples", type=int, default=200_000)
    p_rep = sub.add_parser("report", help="print the manifest and report of a run directory")
    p_rep.add_argument("run_dir")

    args = parser.parse_args(argv)
    if args.command == "report":
        return cmd_report(args.run_dir)

    overrides = {k: getattr(args, k, None) for k in CONFIG_KEYS}
    try:
        cfg = load_config(args.config, overrides)
        if cfg["workers"]:
            os.environ.setdefault("OMP_NUM_THREADS", str(cfg["workers"]))
        if args.command == "approximate":
            return cmd_approximate(cfg)
        if args.command == "refine":
            return cmd_refine(cfg)
        if args.command == "check-hypothesis":
            return cmd_check_hypothesis(cfg, args.h_grid, args.prime_cache)
        if args.command == "zero-scan":
            center = complex(args.center_re if args.center_re is not None else cfg["sigma0"],
                             args.center_im)
            cradius = args.cradius if args.cradius is not None else cfg["radius"]
            return cmd_zero_scan(cfg, center, cradius, args.samples,
                                 args.compare_n, args.phases)
        if args.command == "torus":
            return cmd_torus(cfg, args.N, args.r, args.eps_slab, args.samples)
    except (InvalidProblem, KeyError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 3
    except ApproximationStall as exc:
        print(f"stall: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
