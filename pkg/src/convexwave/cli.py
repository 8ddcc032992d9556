"""Command-line surface: experiment orchestration with reproducible artifacts.

Subcommands: airy | dispersion | gallery | cusp | billiard | report.  Each run
resolves its configuration (JSON file overridden by flags), writes CSV/JSON
outputs plus a manifest, and is deterministic given (config, seed).

Exit codes: 0 success, 2 usage error, 3 numeric-validity error, 4 unreliable
verdict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .airy import AiryError, airy_zeros, calibrate_branch_leading
from .fields import FrequencyWindow
from .gallery import GalleryError, strichartz_quotient
from .oscillatory import GridCoverageError, QuadratureError, gamma_schrodinger, gamma_wave, pool_curves
from .params import ParameterError, make_params, sharp_schrodinger_q, sharp_wave_q
from .cusp import CuspError, GlidingRegimeError, PhaseSpacePoint, billiard_iterate, boundary_residual, cusp_field
from .normlab import NormError, NormRegionSpec, counterexample_report, region_norms

USAGE_EXIT = 2
NUMERIC_EXIT = 3
UNRELIABLE_EXIT = 4

_NUMERIC_ERRORS = (ParameterError, AiryError, QuadratureError, GridCoverageError,
                   GalleryError, CuspError, GlidingRegimeError, NormError, ValueError)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: Path, header, rows, manifest_hash: str):
    lines = [f"# manifest={manifest_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, obj, manifest_hash: str):
    payload = {"manifest": manifest_hash, **obj}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def parallel_map(fn, items, threads: int):
    """Ordered map with a bounded worker pool (deterministic reduction order)."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class Manifest:
    def __init__(self, config: dict, seed: int):
        self.config = config
        self.seed = seed
        self.timings: dict[str, float] = {}
        canon = json.dumps({"config": config, "seed": seed}, sort_keys=True)
        self.hash = hashlib.sha256(canon.encode()).hexdigest()[:16]

    def time(self, stage: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.timings[stage] = round(time.perf_counter() - self.t0, 3)

        return _Timer()

    def write(self, outdir: Path):
        payload = {
            "config_hash": self.hash,
            "seed": self.seed,
            "versions": {"convexwave": __version__, "numpy": np.__version__},
            "timings": self.timings,
            "config": self.config,
        }
        (outdir / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")


def _load_config(args, section: str) -> dict:
    cfg = {}
    if args.config:
        full = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg.update(full.get(section, {}))
        cfg.update({k: v for k, v in full.items() if not isinstance(v, dict)})
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "out", "command", "func"):
            cfg[key.replace("-", "_")] = val
    return cfg


def _h_grid(cfg) -> list[float]:
    if cfg.get("h_list"):
        return [float(x) for x in str(cfg["h_list"]).split(",")]
    h_min = float(cfg.get("h_min", 1e-4))
    h_max = float(cfg.get("h_max", 1e-2))
    steps = int(cfg.get("h_steps", 3))
    if steps == 1:
        return [h_max]
    return list(np.geomspace(h_max, h_min, steps))


def cmd_airy(args) -> int:
    cfg = _load_config(args, "airy")
    count = int(cfg.get("count", 10))
    if count < 1:
        print("error: count must be >= 1", file=sys.stderr)
        return USAGE_EXIT
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, int(cfg.get("seed", 0)))
    with manifest.time("zeros"):
        zeros = airy_zeros(count)
    write_csv(outdir / "airy_zeros.csv", ["k", "omega_k"],
              [(k, zeros[k]) for k in range(count)], manifest.hash)
    write_json(outdir / "airy_branch.json", calibrate_branch_leading(), manifest.hash)
    manifest.write(outdir)
    return 0


def cmd_dispersion(args) -> int:
    cfg = _load_config(args, "dispersion")
    flow = cfg.get("flow", "wave")
    if flow not in ("wave", "schrodinger"):
        print(f"error: unknown flow {flow!r}", file=sys.stderr)
        return USAGE_EXIT
    lam_min = float(cfg.get("lambda_min", 30.0))
    lam_max = float(cfg.get("lambda_max", 3000.0))
    lam_steps = int(cfg.get("lambda_steps", 16))
    if lam_steps < 1 or lam_max <= lam_min:
        print("error: empty lambda range", file=sys.stderr)
        return USAGE_EXIT
    epsilon = float(cfg.get("epsilon", 0.1))
    k_mode = int(cfg.get("k", 9))
    window = FrequencyWindow(1.0, float(cfg.get("win_inner", 0.25)), float(cfg.get("win_outer", 0.5)))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, int(cfg.get("seed", 0)))
    omega = airy_zeros(k_mode + 1)[k_mode]
    lam_grid = np.geomspace(lam_min, lam_max, lam_steps)
    threads = int(cfg.get("threads", 1))
    scan = gamma_wave if flow == "wave" else gamma_schrodinger

    seed = int(cfg.get("seed", 0)) or None

    def one(h):
        return scan(make_params(h, epsilon, 0.2), omega, 2, lam_grid, window=window, seed=seed)

    with manifest.time("scan"):
        curves = parallel_map(one, _h_grid(cfg), threads)
        pooled = pool_curves(curves)
        if flow == "wave":
            pooled.fit(mu_min=float(cfg.get("mu_min", 12.0)))
    rows = [row for c in curves for row in c.rows()]
    write_csv(outdir / "dispersion.csv", ["flow", "d", "h", "lambda", "mu", "gamma"], rows, manifest.hash)
    write_json(outdir / "dispersion_fit.json", {
        "flow": flow, "k": k_mode,
        "lambda_exponent": pooled.fitted_lambda_exponent,
        "lambda_stderr": pooled.lambda_stderr,
        "h_exponent": pooled.fitted_h_exponent,
        "h_stderr": pooled.h_stderr,
        "meta": {k: v for k, v in pooled.meta.items() if k != "stationary_rho_inside_window"},
    }, manifest.hash)
    manifest.write(outdir)
    return 0


def cmd_gallery(args) -> int:
    cfg = _load_config(args, "gallery")
    k_mode = int(cfg.get("k", 0))
    if k_mode < 0:
        print("error: mode index k must be >= 0", file=sys.stderr)
        return USAGE_EXIT
    flow = cfg.get("flow", "schrodinger")
    r = float(cfg.get("r", 6.0))
    data = cfg.get("data", "coherent")
    if cfg.get("q") is not None:
        q = float(cfg["q"])
    else:
        q = float(sharp_schrodinger_q(r) if flow == "schrodinger" else sharp_wave_q(r))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, int(cfg.get("seed", 0)))
    h_list = _h_grid(cfg)
    with manifest.time("quotients"):
        res = strichartz_quotient(flow, data, q, r, (0.0, float(cfg.get("t_max", 0.3))),
                                  h_list, k=k_mode, n_t=int(cfg.get("t_steps", 25)))
    write_csv(outdir / "gallery_quotients.csv", ["h", "quotient"], res.samples, manifest.hash)
    write_json(outdir / "gallery_fit.json", {
        "flow": flow, "data": data, "k": k_mode, "q": q, "r": r,
        "fitted_exponent": res.fitted_exponent, "stderr": res.stderr,
        "reliable": res.reliable,
    }, manifest.hash)
    manifest.write(outdir)
    return 0


def cmd_cusp(args) -> int:
    cfg = _load_config(args, "cusp")
    if cfg.get("epsilon") is None:
        print("error: --epsilon is required for the cusp experiment", file=sys.stderr)
        return USAGE_EXIT
    epsilon = float(cfg["epsilon"])
    r_list = [float(x) for x in str(cfg.get("r_list", cfg.get("r", "6"))).split(",")]
    h_list = _h_grid(cfg)
    c0 = float(cfg.get("c0", 0.25))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, int(cfg.get("seed", 0)))

    residual_rows = []
    with manifest.time("boundary_residual"):
        for h in h_list:
            params = make_params(h, epsilon, c0)
            try:
                ratio = boundary_residual(0, params)
                residual_rows.append({"n": 0, "lambda": params.lam, "residual_ratio": ratio})
            except CuspError as exc:
                residual_rows.append({"n": 0, "lambda": params.lam, "error": str(exc)})
    write_json(outdir / "boundary_residual.json", {"records": residual_rows}, manifest.hash)

    region_rows = []
    with manifest.time("region_norms"):
        region_spec = NormRegionSpec(M=2.0, outer_margin=0.2)
        for h in h_list:
            params = make_params(h, epsilon, c0)
            fld = cusp_field(0, 0.0, params)
            for r in r_list:
                for region, value in region_norms(fld, region_spec, r, params).items():
                    region_rows.append((h, 0, 0.0, r, region, value))
    write_csv(outdir / "region_norms.csv", ["h", "n", "t", "r", "region", "norm"],
              region_rows, manifest.hash)

    exit_code = 0
    verdicts = []
    norm_rows = []
    with manifest.time("verdict"):
        for r in r_list:
            if r <= 4.0:
                verdicts.append({"r": r, "verdict": "NOT-APPLICABLE",
                                 "reason": "construction yields no contradiction for r <= 4"})
                continue
            rep = counterexample_report(r, epsilon, h_list, c0=c0,
                                        q=cfg.get("q"),
                                        samples_per_sqrt_a=int(cfg.get("t_resolution", 12)),
                                        threads=int(cfg.get("threads", 1)))
            verdicts.append(rep.to_dict())
            for h, qv in rep.samples:
                norm_rows.append((h, r, rep.q, qv))
            if rep.verdict == "UNRELIABLE":
                exit_code = UNRELIABLE_EXIT
    write_csv(outdir / "cusp_norms.csv", ["h", "r", "q", "Q"], norm_rows, manifest.hash)
    write_json(outdir / "verdict.json", {"verdicts": verdicts}, manifest.hash)
    manifest.write(outdir)
    return exit_code


def cmd_billiard(args) -> int:
    cfg = _load_config(args, "billiard")
    point = PhaseSpacePoint(y=float(cfg.get("y", 0.0)), t=float(cfg.get("t", 0.0)),
                            eta=float(cfg.get("eta", 1.0)), tau=float(cfg.get("tau", 1.5)))
    sign = +1 if str(cfg.get("sign", "+")) in ("+", "+1", "1") else -1
    n = int(cfg.get("n", 1))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, int(cfg.get("seed", 0)))
    rows = [(0, point.y, point.t, point.eta, point.tau)]
    for j in range(1, n + 1):
        p = billiard_iterate(point, sign, j)
        rows.append((j, p.y, p.t, p.eta, p.tau))
    write_csv(outdir / "billiard.csv", ["n", "y", "t", "eta", "tau"], rows, manifest.hash)
    manifest.write(outdir)
    return 0


def cmd_report(args) -> int:
    outdir = Path(args.out)
    if not outdir.exists():
        print(f"error: no run directory {outdir}", file=sys.stderr)
        return USAGE_EXIT
    summary = {}
    for name in ("dispersion_fit", "gallery_fit", "verdict", "boundary_residual", "airy_branch"):
        path = outdir / f"{name}.json"
        if path.exists():
            summary[name] = json.loads(path.read_text(encoding="utf-8"))
    text = json.dumps(summary, indent=2, sort_keys=True)
    (outdir / "summary.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convexwave",
                                     description="dispersive scaling laboratory for a model convex domain")
    parser.add_argument("--config", help="JSON config file with per-command sections")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, help="worker pool size")
        p.add_argument("--seed", type=int, help="seed (grid jitter only)")
        p.add_argument("--config", help="JSON config file")

    p = sub.add_parser("airy", help="write the Airy zero table")
    common(p)
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_airy)

    p = sub.add_parser("dispersion", help="dispersive amplitude scans")
    common(p)
    p.add_argument("--flow", choices=["wave", "schrodinger"])
    p.add_argument("--h-min", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--h-steps", type=int)
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--lambda-steps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--mu-min", type=float, help="fit cut for the wave flow (mu >> 1 regime)")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("gallery", help="gallery-mode Strichartz quotients")
    common(p)
    p.add_argument("--flow", choices=["schrodinger", "halfwave"])
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--data", choices=["coherent", "gaussian"])
    p.add_argument("--h-min", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--h-steps", type=int)
    p.set_defaults(func=cmd_gallery)

    p = sub.add_parser("cusp", help="reflected-cusp norms, residuals and verdict")
    common(p)
    p.add_argument("--h-list", help="comma-separated h values")
    p.add_argument("--h-min", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--h-steps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--r-list", help="comma-separated r values")
    p.add_argument("--r", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--t-resolution", type=int)
    p.add_argument("--c0", type=float)
    p.set_defaults(func=cmd_cusp)

    p = sub.add_parser("billiard", help="iterate the billiard ball map")
    common(p)
    p.add_argument("--y", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--sign", choices=["+", "-"])
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_billiard)

    p = sub.add_parser("report", help="summarize artifacts from a run directory")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GlidingRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
