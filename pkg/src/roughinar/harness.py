"""Experiment orchestration: config validation, run dispatch, manifests.

Configs are flat JSON objects. Every run writes into its own output
directory: data files first (fixed column orders, repr-precision floats, no
timestamps), then manifest.json with SHA-256 digests of every data file.
Reruns with the same config are byte-identical regardless of worker count.
"""

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .inar_sim import (run_ensemble, simulate_inar, simulate_raw,
                       export_path, lemma2_decomposition_check,
                       lemma3_identity_check)
from .kernels import build_power_law_kernel, make_scaling_family, scale_kernel
from .limit_sim import (export_limit_path, run_limit_ensemble,
                        simulate_limit)
from .mlf import F_alpha_lambda_grid
from .renewal import convolve, laplace_check, renewal_sequence, rho_density
from .stats import ks_two_sample

__all__ = ["ExperimentConfig", "RunManifest", "KINDS", "parse_config",
           "run_experiment", "config_from_mapping"]

KINDS = ("simulate", "limit", "convergence", "renewal-check",
         "identity-check", "ml-eval")

DEFAULTS = {
    "alpha": 0.75,
    "lambda_rate": 1.0,
    "nu_star": 1.0,
    "T_list": [2000.0],
    "n_paths": 1000,
    "n_grid": 2000,
    "seed_base": 1,
    "output_dir": "run-output",
    "worker_count": 1,
}

LAPLACE_S_VALUES = (1e-2, 3e-3, 1e-3)
LAPLACE_N_TRUNC = 200_000


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    alpha: float
    lambda_rate: float
    nu_star: float
    T_list: tuple
    n_paths: int
    n_grid: int
    seed_base: int
    output_dir: str
    worker_count: int

    def echo(self):
        d = asdict(self)
        d["T_list"] = list(self.T_list)
        return d

    def data_echo(self):
        """Config echo embedded in data files.

        Excludes output_dir and worker_count so reruns of the same
        experiment produce byte-identical data regardless of where they
        write or how many workers they use; the manifest carries the full
        config.
        """
        d = self.echo()
        d.pop("output_dir")
        d.pop("worker_count")
        return d


@dataclass
class RunManifest:
    kind: str
    config: dict
    seeds: dict
    artifact_version: str
    wall_clock_s: float
    files: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kind": self.kind,
            "config": self.config,
            "seeds": self.seeds,
            "artifact_version": self.artifact_version,
            "wall_clock_s": self.wall_clock_s,
            "files": self.files,
        }


def config_from_mapping(data, kind=None):
    """Validate a flat mapping; report every violation, not just the first."""
    problems = []
    data = dict(data)
    file_kind = data.pop("kind", None)
    kind = kind or file_kind
    if kind is None:
        problems.append("kind is required (subcommand or config key)")
    elif kind not in KINDS:
        problems.append(f"unknown kind {kind!r}; expected one of {KINDS}")

    unknown = set(data) - set(DEFAULTS)
    for key in sorted(unknown):
        problems.append(f"unknown key: {key}")
    merged = {**DEFAULTS, **{k: v for k, v in data.items()
                             if k in DEFAULTS}}

    def number(key, value):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{key} must be a number, got {value!r}")
            return None
        return float(value)

    alpha = number("alpha", merged["alpha"])
    if alpha is not None:
        if kind == "limit":
            if not 0.5 < alpha <= 1.0:
                problems.append("alpha must lie in (0.5, 1]")
        elif not 0.5 < alpha < 1.0:
            problems.append("alpha must lie in (0.5, 1)")

    lam = number("lambda_rate", merged["lambda_rate"])
    if lam is not None and lam <= 0:
        problems.append("lambda_rate must be positive")
    nu = number("nu_star", merged["nu_star"])
    if nu is not None and nu <= 0:
        problems.append("nu_star must be positive")

    t_list = merged["T_list"]
    if not isinstance(t_list, (list, tuple)) or not t_list:
        problems.append("T_list must be a non-empty list of horizons")
        t_list = []
    else:
        cleaned = []
        for t in t_list:
            if isinstance(t, bool) or not isinstance(t, (int, float)) \
                    or t < 1:
                problems.append(f"T_list entries must be numbers >= 1, "
                                f"got {t!r}")
            else:
                cleaned.append(float(t))
        t_list = cleaned

    def integer(key, lo, hi=None):
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, int):
            problems.append(f"{key} must be an integer, got {v!r}")
            return None
        if v < lo or (hi is not None and v > hi):
            bound = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
            problems.append(f"{key} must be {bound}, got {v}")
            return None
        return v

    n_paths = integer("n_paths", 1)
    n_grid = integer("n_grid", 100)
    seed_base = integer("seed_base", 0, 2 ** 64 - 1)
    workers = integer("worker_count", 1)
    out_dir = merged["output_dir"]
    if not isinstance(out_dir, str) or not out_dir:
        problems.append("output_dir must be a non-empty string")

    if problems:
        raise ConfigError("invalid configuration:\n  " +
                          "\n  ".join(problems))
    return ExperimentConfig(kind=kind, alpha=alpha, lambda_rate=lam,
                            nu_star=nu, T_list=tuple(t_list),
                            n_paths=n_paths, n_grid=n_grid,
                            seed_base=seed_base, output_dir=out_dir,
                            worker_count=workers)


def parse_config(text, kind=None):
    """Parse and validate a JSON config document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_mapping(data, kind=kind)


class _RunWriter:
    """Tracks written files so failures can clean up and manifests digest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.names = []

    def path(self, name):
        self.names.append(name)
        return self.out_dir / name

    def write_text(self, name, text):
        target = self.path(name)
        try:
            target.write_text(text)
        except OSError as exc:
            raise OSError(f"failed writing {target}: {exc}") from exc

    def write_json(self, name, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True)
                        + "\n")

    def open_text(self, name):
        target = self.path(name)
        return open(target, "w")

    def cleanup(self):
        for name in self.names:
            target = self.out_dir / name
            if target.exists():
                target.unlink()

    def digests(self):
        out = []
        for name in self.names:
            data = (self.out_dir / name).read_bytes()
            out.append({"name": name,
                        "sha256": hashlib.sha256(data).hexdigest(),
                        "bytes": len(data)})
        return out


def run_experiment(config):
    """Dispatch one experiment; returns the manifest (also written to disk)."""
    if config.kind == "ml-eval":
        raise ConfigError("ml-eval is a stream processor; use the ml-eval "
                          "subcommand with --input")
    writer = _RunWriter(config.output_dir)
    started = time.perf_counter()
    try:
        seeds = _DISPATCH[config.kind](config, writer)
    except BaseException:
        writer.cleanup()
        raise
    manifest = RunManifest(kind=config.kind, config=config.echo(),
                           seeds=seeds, artifact_version=__version__,
                           wall_clock_s=time.perf_counter() - started,
                           files=writer.digests())
    (writer.out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return manifest


def _family_for(config, T, t_steps):
    kernel = build_power_law_kernel(config.alpha, max(t_steps, 16))
    family = make_scaling_family(kernel, T, config.lambda_rate,
                                 config.nu_star)
    return kernel, family


def _run_simulate(config, writer):
    for T in config.T_list:
        t_steps = int(T)
        kernel, family = _family_for(config, T, t_steps)
        ens = run_ensemble(family, kernel, t_steps, config.n_paths,
                           config.seed_base, workers=config.worker_count,
                           config=config.data_echo())
        label = f"{int(T)}"
        with writer.open_text(f"path0_T{label}.csv") as fh:
            export_path(simulate_inar(family, kernel, t_steps,
                                      config.seed_base, 0), fh)
        writer.write_json(f"summary_T{label}.json", ens.to_dict())
    return {"seed_base": config.seed_base,
            "per_path": "seed_base + path_index"}


def _run_limit(config, writer):
    ens = run_limit_ensemble(config.alpha, config.lambda_rate,
                             config.nu_star, config.n_grid, config.n_paths,
                             config.seed_base, workers=config.worker_count,
                             config=config.data_echo())
    path0 = simulate_limit(config.alpha, config.lambda_rate, config.nu_star,
                           config.n_grid, config.seed_base, 0)
    with writer.open_text("limit_path0.csv") as fh:
        export_limit_path(path0, fh)
    writer.write_json("limit_summary.json", ens.to_dict())
    writer.write_text("limit_y1.csv", "y1\n" + "".join(
        f"{float(v)!r}\n" for v in ens.y_end))
    return {"seed_base": config.seed_base,
            "per_path": "seed_base + path_index"}


def _run_convergence(config, writer):
    lim = run_limit_ensemble(config.alpha, config.lambda_rate,
                             config.nu_star, config.n_grid, config.n_paths,
                             config.seed_base, workers=config.worker_count)
    rows = []
    mses = []
    for T in config.T_list:
        t_steps = int(T)
        kernel, family = _family_for(config, T, t_steps)
        ens = run_ensemble(family, kernel, t_steps, config.n_paths,
                           config.seed_base, workers=config.worker_count)
        dev = ens.bracket_end - ens.y_end
        mse = float(np.mean(dev * dev))
        mse_se = float(np.std(dev * dev, ddof=1)
                       / math.sqrt(config.n_paths))
        mses.append(mse)
        ks = ks_two_sample(ens.y_end, lim.y_end)
        rows.append((T, "bracket_mse", mse, mse_se))
        rows.append((T, "ks_y1_vs_limit", ks.statistic, math.nan))
    lines = ["T metric value stderr"]
    for T, metric, value, se in rows:
        lines.append(f"{float(T)!r} {metric} {float(value)!r} {float(se)!r}")
    writer.write_text("tsweep.csv", "\n".join(lines) + "\n")

    summary = {
        "T_list": list(config.T_list),
        "bracket_mse": mses,
        "strictly_decreasing": bool(all(a > b for a, b in
                                        zip(mses, mses[1:]))),
    }
    if len(config.T_list) >= 2:
        slope = float(np.polyfit(np.log(config.T_list), np.log(mses), 1)[0])
        summary["bracket_loglog_slope"] = slope
    writer.write_json("convergence_summary.json", summary)
    return {"seed_base": config.seed_base,
            "per_path": "seed_base + path_index",
            "limit_seed_base": config.seed_base}


def _run_renewal_check(config, writer):
    T = max(config.T_list)
    t_steps = int(T)
    kernel, family = _family_for(config, T, t_steps)
    eta_t = scale_kernel(kernel, family.a_T)
    A = renewal_sequence(eta_t, t_steps, a_T=family.a_T)

    recursion_residual = float(np.max(np.abs(
        A.A - (eta_t[:t_steps] + convolve(eta_t, A.A, t_steps)))))
    identity_residual = float(np.max(np.abs(
        convolve(A.A, eta_t, t_steps) - (A.A - eta_t[:t_steps]))))
    doubling = renewal_sequence(eta_t, t_steps, a_T=family.a_T,
                                method="doubling")
    doubling_gap = float(np.max(np.abs(A.A - doubling.A)))

    density = rho_density(A, T, 1.0)
    f_limit = F_alpha_lambda_grid(config.alpha, family.v_T, density.grid)
    sup_gap = float(np.max(np.abs(density.cdf - f_limit)))

    lap_kernel = build_power_law_kernel(config.alpha, LAPLACE_N_TRUNC)
    lap = laplace_check(lap_kernel, LAPLACE_S_VALUES)

    with writer.open_text("density.csv") as fh:
        fh.write("x pdf cdf\n")
        for x, p, c in zip(density.grid, density.pdf, density.cdf):
            fh.write(f"{float(x)!r} {float(p)!r} {float(c)!r}\n")
    writer.write_json("renewal_report.json", {
        "T": T,
        "alpha": config.alpha,
        "recursion_residual": recursion_residual,
        "convolution_identity_residual": identity_residual,
        "doubling_agreement_gap": doubling_gap,
        "cdf_sup_gap_vs_limit": sup_gap,
        "norm_truncation_gap": density.norm_gap,
        "laplace": {
            "s_values": list(lap.s_values),
            "ratios": list(lap.ratios),
            "delta": lap.delta_ref,
            "drift": lap.drift,
            "stabilizes": lap.stabilizes,
        },
    })
    return {"seed_base": config.seed_base, "note": "deterministic"}


def _identity_families(config, t_steps):
    T = max(config.T_list)
    kernel, family = _family_for(config, T, t_steps)
    eta_power = scale_kernel(kernel, family.a_T)
    return [
        ("zero", np.zeros(1), 1.0),
        ("lag1", np.array([0.5]), 1.0),
        ("lag2", np.array([0.3, 0.2]), 1.0),
        (f"power-law-{config.alpha}", eta_power, family.mu_T),
    ]


def _run_identity_check(config, writer):
    t_steps = int(min(config.T_list))
    rows = []
    for name, eta_t, mu_t in _identity_families(config, t_steps):
        A = renewal_sequence(eta_t, t_steps)
        worst3 = 0.0
        worst2 = 0.0
        for p in range(config.n_paths):
            path = simulate_raw(eta_t, mu_t, t_steps, config.seed_base, p)
            worst3 = max(worst3, lemma3_identity_check(path, A))
            worst2 = max(worst2, lemma2_decomposition_check(path, A))
        rows.append((name, "lemma3_max_abs", worst3, 1e-8))
        rows.append((name, "lemma2_max_rel", worst2, 1e-8))
    lines = ["family metric value tolerance status"]
    for name, metric, value, tol in rows:
        status = "pass" if value <= tol else "FAIL"
        lines.append(f"{name} {metric} {float(value)!r} {float(tol)!r} {status}")
    writer.write_text("identity_table.csv", "\n".join(lines) + "\n")
    writer.write_json("identity_report.json", {
        "t_steps": t_steps,
        "n_paths": config.n_paths,
        "all_pass": bool(all(v <= tol for _, _, v, tol in rows)),
        "rows": [{"family": f, "metric": m, "value": v, "tolerance": tol}
                 for f, m, v, tol in rows],
    })
    return {"seed_base": config.seed_base,
            "per_path": "seed_base + path_index"}


_DISPATCH = {
    "simulate": _run_simulate,
    "limit": _run_limit,
    "convergence": _run_convergence,
    "renewal-check": _run_renewal_check,
    "identity-check": _run_identity_check,
}
