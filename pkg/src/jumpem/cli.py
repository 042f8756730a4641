"""Experiment command line: config parsing, dispatch, and artifact writing.

Subcommands: simulate, strong-error, weak-error, wasserstein, lower-bound,
fiber-pdf. Each run writes four artifacts into its run directory:

* report.csv      tabular results, 17 significant digits
* summary.json    slopes, confidence intervals, assertion outcomes
* manifest.json   resolved config + seed + code version (replayable)
* timings.json    wall-clock runtimes (excluded from the determinism contract)

Configs are flat key=value text files with [sections]; command-line flags
override file values. Unknown keys are rejected with their line number.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, appfiber, harness, measure, model, noise, scheme

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config schema and parsing
# ---------------------------------------------------------------------------

def _csv_ints(s):
    return tuple(int(v) for v in str(s).split(","))


def _csv_floats(s):
    return tuple(float(v) for v in str(s).split(","))


def _bool(s):
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


COMMON_KEYS = {
    "seed": int, "threads": int, "paths": int, "out_dir": str, "assert": _bool,
}

SCHEMAS = {
    "simulate": {
        "preset": str, "n": int, "eps": float, "variant": str, "horizon": float,
        "alpha": float, "rho": float, "out": str, "dump_noise": str,
        "sampler": str, "lambda_star": float, "eps_rule": str,
        # preset = custom: coefficients as expressions over t, x (and z),
        # against a truncated stable kernel with the given alpha and b
        "drift": str, "diffusion": str, "jump": str, "b": float, "x0": float,
    },
    "strong-error": {
        "preset": str, "p_norms": _csv_ints, "n_grid": _csv_ints, "n_max": int,
        "eps_rule": str, "eps_min": float, "horizon": float, "alpha": float,
        "rho": float, "block_size": int,
    },
    "weak-error": {
        "preset": str, "alpha": float, "k_range": _csv_ints,
        "eps_grid": _csv_floats, "horizon": float, "x_start": float,
        "block_size": int, "variants": str, "matched_n": _bool,
    },
    "wasserstein": {
        "kernel": str, "alpha": float, "b": float, "rho": float,
        "z_minus": float, "z_plus": float, "t_star": float, "q_mod": float,
        "eps_grid": _csv_floats, "samples": int, "q": float, "t1": float,
    },
    "lower-bound": {
        "n_grid": _csv_ints, "p_norms": _csv_ints, "n_max": int, "alpha": float,
    },
    "fiber-pdf": {
        "sigma": float, "gammas": _csv_floats, "alpha": float, "z_minus": float,
        "z_plus": float, "t_star": float, "q": float, "theta0": float, "n": int,
        "eps": float, "horizon": float, "snapshots": _csv_floats,
        "control": _bool,
    },
}

DEFAULTS = {
    "simulate": {"preset": "strong_p_sweep", "n": 64, "variant": "with_substitute",
                 "horizon": 1.0, "out": "csv", "sampler": "timechange"},
    "strong-error": {"preset": "strong_p_sweep", "p_norms": (2,),
                     "n_grid": (512, 1024, 2048), "n_max": 16384,
                     "eps_rule": "half_plus_inv_p", "horizon": 1.0,
                     "block_size": 2500},
    "weak-error": {"preset": "weak_multiplicative", "alpha": 1.5,
                   "k_range": (2, 3, 4, 5), "horizon": 1.0, "x_start": 10.0,
                   "block_size": 100_000, "variants": "both", "matched_n": True},
    "wasserstein": {"alpha": 0.5, "b": 1.0, "eps_grid": (0.2, 0.1, 0.05, 0.025),
                    "samples": 100_000, "q": 2.0, "t1": 1.0},
    "lower-bound": {"n_grid": (64, 128, 256, 512, 1024, 2048), "p_norms": (2, 4),
                    "n_max": 32768, "alpha": 0.5},
    "fiber-pdf": {"sigma": 0.0, "gammas": (1.0, 0.0, 0.0, 0.0, 0.0),
                  "alpha": 1.5, "z_minus": 8.0, "z_plus": 8.0, "t_star": 0.2,
                  "q": 1.5, "theta0": 0.0, "n": 256, "horizon": 1.0,
                  "snapshots": (0.125, 0.25, 0.5, 1.0), "control": False},
}

COMMON_DEFAULTS = {"seed": 0, "threads": 1, "paths": None, "out_dir": None,
                   "assert": False}


@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int = 0
    threads: int = 1
    paths: int | None = None
    out_dir: str | None = None
    assert_enabled: bool = False
    params: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)

    def resolved_dict(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed,
                "threads": self.threads, "paths": self.paths,
                "out_dir": self.out_dir, "assert": self.assert_enabled,
                "params": dict(sorted(self.params.items())),
                "assertions": dict(sorted(self.assertions.items()))}


def parse_kv_sections(text: str, source: str = "<config>") -> dict:
    """Parse the flat key=value format with [sections], keeping line numbers."""
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        sections[current][key] = (value.strip(), lineno)
    return sections


def parse_config(argv=None) -> ExperimentConfig:
    """Resolve subcommand, config file, and flag overrides into a validated
    ExperimentConfig with defaults applied."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.from_manifest:
        return _config_from_manifest(ns.from_manifest, ns)
    if ns.subcommand is None:
        parser.error("a subcommand (or --from-manifest) is required")
    schema = SCHEMAS[ns.subcommand]
    params = dict(DEFAULTS[ns.subcommand])
    common = dict(COMMON_DEFAULTS)
    assertions = {}
    if ns.config:
        text = Path(ns.config).read_text()
        sections = parse_kv_sections(text, source=str(ns.config))
        for section, entries in sections.items():
            if section == "experiment":
                for key, (value, lineno) in entries.items():
                    if key == "subcommand":
                        if value != ns.subcommand:
                            raise ConfigError(
                                f"{ns.config}:{lineno}: config is for {value!r}, "
                                f"not {ns.subcommand!r}")
                        continue
                    if key in COMMON_KEYS:
                        common[key] = COMMON_KEYS[key](value)
                    elif key in schema:
                        params[key] = schema[key](value)
                    else:
                        raise ConfigError(
                            f"{ns.config}:{lineno}: unknown key {key!r} for "
                            f"{ns.subcommand}")
            elif section == "assertions":
                for key, (value, lineno) in entries.items():
                    assertions[key] = float(value)
            else:
                raise ConfigError(f"{ns.config}: unknown section [{section}]")
    cli_overrides = {k.replace("-", "_"): v for k, v in vars(ns).items()
                     if k not in ("subcommand", "config", "from_manifest")
                     and v is not None}
    for key, value in cli_overrides.items():
        if key in COMMON_KEYS or key in ("assert_enabled",):
            if key == "assert_enabled":
                common["assert"] = value
            else:
                common[key] = value
        elif key in schema:
            params[key] = schema[key](value) if not isinstance(value, tuple) else value
        else:
            raise ConfigError(f"flag --{key} not valid for {ns.subcommand}")
    _validate_conflicts(ns.subcommand, params)
    return ExperimentConfig(
        subcommand=ns.subcommand, seed=common["seed"], threads=common["threads"],
        paths=common["paths"], out_dir=common["out_dir"],
        assert_enabled=common["assert"], params=params, assertions=assertions)


def _validate_conflicts(subcommand: str, params: dict) -> None:
    if subcommand == "simulate" and "eps" in params and "eps_rule" in params:
        raise ConfigError("give either eps or eps_rule, not both")
    if subcommand == "strong-error" and params.get("eps_rule") == "explicit" \
            and "eps_min" not in params:
        raise ConfigError("explicit eps rule requires eps_min")


def _config_from_manifest(path: str, ns) -> ExperimentConfig:
    data = json.loads(Path(path).read_text())
    cfg = data["config"]
    return ExperimentConfig(
        subcommand=cfg["subcommand"], seed=cfg["seed"], threads=cfg["threads"],
        paths=cfg["paths"],
        out_dir=ns.out_dir if ns.out_dir is not None else cfg["out_dir"],
        assert_enabled=cfg["assert"],
        params={k: tuple(v) if isinstance(v, list) else v
                for k, v in cfg["params"].items()},
        assertions=cfg["assertions"])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumpem",
        description="Jump-SDE simulation and convergence-rate experiments")
    parser.add_argument("--from-manifest", default=None,
                        help="replay a run from its manifest.json")
    sub = parser.add_subparsers(dest="subcommand")
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--assert", dest="assert_enabled", action="store_const",
                       const=True, default=None)
        for key, conv in schema.items():
            flag = "--" + key.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, dest=key, action="store_const", const=True,
                               default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    # top-level --out-dir for manifest replay
    parser.add_argument("--out-dir", dest="out_dir", default=None)
    return parser


# ---------------------------------------------------------------------------
# artifact writing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_dir(config: ExperimentConfig) -> Path:
    if config.out_dir:
        d = Path(config.out_dir)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        d = Path("runs") / f"{stamp}-seed{config.seed}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _check_assertions(config: ExperimentConfig, summary: dict) -> list:
    """Assertion keys look like slope_<label>_min / slope_<label>_max and are
    compared against summary['reports'][label]['fitted_slope']."""
    failures = []
    for key, bound in sorted(config.assertions.items()):
        if not key.startswith("slope_") or not key.endswith(("_min", "_max")):
            failures.append(f"unrecognised assertion key {key!r}")
            continue
        label = key[len("slope_"):key.rfind("_")]
        kind = key.rsplit("_", 1)[1]
        rep = summary.get("reports", {}).get(label)
        if rep is None:
            failures.append(f"{key}: no report labelled {label!r}")
            continue
        slope = rep["fitted_slope"]
        if kind == "min" and slope < bound:
            failures.append(f"{key}: slope {slope:.4f} < {bound}")
        if kind == "max" and slope > bound:
            failures.append(f"{key}: slope {slope:.4f} > {bound}")
    return failures


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _kernel_for(params: dict, preset: str):
    if preset == "low_integrability":
        return {"rho": params.get("rho", -0.75)}
    if preset == "weak_multiplicative":
        return {"alpha": params.get("alpha", 1.5)}
    if preset == "subordinator_lower_bound":
        return {"alpha": params.get("alpha", 0.5)}
    return {}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    out_dir = _run_dir(config)
    t0 = time.perf_counter()
    handler = {
        "simulate": _run_simulate,
        "strong-error": _run_strong,
        "weak-error": _run_weak,
        "wasserstein": _run_wasserstein,
        "lower-bound": _run_lower_bound,
        "fiber-pdf": _run_fiber,
    }[config.subcommand]
    summary, rows, header = handler(config, out_dir)
    write_csv(out_dir / "report.csv", header, rows)
    failures = _check_assertions(config, summary) if config.assert_enabled else []
    summary["assertion_failures"] = failures
    _write_json(out_dir / "summary.json", summary)
    manifest_config = config.resolved_dict()
    manifest_config["out_dir"] = None  # location metadata, not run content
    _write_json(out_dir / "manifest.json",
                {"config": manifest_config, "seed": config.seed,
                 "code_version": __version__})
    _write_json(out_dir / "timings.json",
                {"total_seconds": time.perf_counter() - t0})
    if failures:
        print("assertion failures:", *failures, sep="\n  ", file=sys.stderr)
        return 1
    return 0


def _preset_params(config: ExperimentConfig) -> dict:
    p = config.params
    out = _kernel_for(p, p.get("preset", ""))
    if p.get("preset") in ("weak_multiplicative", "weak_arctan"):
        out["horizon"] = p.get("horizon", 1.0)
        out["x_start"] = p.get("x_start", 10.0)
    return out


def _build_simulate_model(config: ExperimentConfig):
    p = config.params
    if p["preset"] == "custom":
        for key in ("drift", "diffusion", "jump"):
            if key not in p:
                raise ConfigError(f"custom preset requires --{key}")
        kernel = measure.truncated_stable(alpha=p.get("alpha", 0.5),
                                          b=p.get("b", 1.0))
        return model.model_from_expressions(
            p["drift"], p["diffusion"], p["jump"], kernel, x0=p.get("x0", 0.0))
    return model.build_preset(p["preset"], **_preset_params(config))


def _run_simulate(config: ExperimentConfig, out_dir: Path):
    p = config.params
    mdl = _build_simulate_model(config)
    eps = p.get("eps")
    if eps is None:
        eps = 1.0 / p["n"]
    cfg = scheme.SchemeConfig(n=p["n"], eps=float(eps), horizon=p["horizon"],
                              variant=p["variant"])
    n_paths = config.paths or 1
    rows = []
    noise_rows = []
    times = np.linspace(0.0, p["horizon"], p["n"] + 1)
    for path_index in range(n_paths):
        stream = noise.SeedStream(config.seed, path_index)
        realization = noise.generate_noise(
            mdl.kernel, cfg, stream, sampler=p.get("sampler", "timechange"),
            lambda_star=p.get("lambda_star"))
        path = scheme.simulate_path(mdl, cfg, realization)
        rows.extend((path_index, t, x) for t, x in zip(times, path.grid_values))
        if p.get("dump_noise"):
            for i, (w, xi) in enumerate(zip(realization.brownian_increments,
                                            realization.substitute_gaussians)):
                noise_rows.append((path_index, "brownian", float(i), w))
                noise_rows.append((path_index, "substitute", float(i), xi))
            for t_j, z_j in zip(realization.jump_times, realization.jump_sizes):
                noise_rows.append((path_index, "jump", t_j, z_j))
    if p.get("dump_noise"):
        write_csv(Path(p["dump_noise"]), ["path_index", "field", "t", "value"],
                  noise_rows)
    if p.get("out", "csv") == "json":
        _write_json(out_dir / "paths.json",
                    {"rows": [[r[0], float(r[1]), float(r[2])] for r in rows]})
    summary = {"reports": {}, "n_paths": n_paths, "n": p["n"], "eps": float(eps)}
    return summary, rows, ["path_index", "t", "x"]


def _run_strong(config: ExperimentConfig, out_dir: Path):
    p = config.params
    plan = harness.StrongErrorPlan(
        preset=p["preset"], p_norms=tuple(p["p_norms"]), n_grid=tuple(p["n_grid"]),
        n_max=p["n_max"], eps_rule=p["eps_rule"], eps_min=p.get("eps_min"),
        mc_paths=config.paths or 1000, horizon=p["horizon"],
        preset_params=_preset_params(config), block_size=p["block_size"])
    reports = harness.run_strong_error(plan, master_seed=config.seed,
                                       threads=config.threads)
    rows, summary = _reports_to_artifacts(
        {f"strong_p{p_}": rep for p_, rep in reports.items()}, "n")
    return summary, rows, ["label", "abscissa", "estimate", "std_error"]


def _run_weak(config: ExperimentConfig, out_dir: Path):
    p = config.params
    paths = config.paths or 100_000
    if p["preset"] == "weak_multiplicative":
        plan = harness.weak_multiplicative_plan(
            alpha=p["alpha"], k_range=p["k_range"], mc_paths=paths,
            horizon=p["horizon"], x_start=p["x_start"],
            block_size=p["block_size"])
    elif p["preset"] == "weak_arctan":
        plan = harness.weak_arctan_plan(
            eps_grid=p.get("eps_grid", (0.5, 0.4, 0.3)), mc_paths=paths,
            horizon=p["horizon"], x_start=p["x_start"],
            matched_n=p["matched_n"], block_size=p["block_size"])
    else:
        raise ConfigError(f"no weak-error plan for preset {p['preset']!r}")
    reports = harness.run_weak_error(plan, master_seed=config.seed,
                                     threads=config.threads)
    rows, summary = _reports_to_artifacts(
        {f"weak_{v}": rep for v, rep in reports.items()}, "eps")
    return summary, rows, ["label", "abscissa", "estimate", "std_error"]


def _run_wasserstein(config: ExperimentConfig, out_dir: Path):
    p = config.params
    kernel = measure.truncated_stable(alpha=p["alpha"], b=p["b"])
    rep = harness.empirical_wasserstein_check(
        kernel, lambda z: z, p["eps_grid"], t0=0.0, t1=p["t1"],
        samples=config.paths or p["samples"], q=p["q"], master_seed=config.seed)
    rows = [("wasserstein", e, d, hw) for e, d, hw in
            zip(rep.eps_grid, rep.distances, rep.half_widths)]
    slope, ci = harness.fit_rate(rep.eps_grid, rep.distances, "eps")
    summary = {"reports": {"wasserstein": {
        "fitted_slope": slope, "slope_ci": list(ci),
        "distances": rep.distances.tolist(),
        "ratio_bounds": rep.ratio_bounds.tolist(),
        "eps_grid": rep.eps_grid.tolist()}}}
    return summary, rows, ["label", "eps", "distance", "half_width"]


def _run_lower_bound(config: ExperimentConfig, out_dir: Path):
    p = config.params
    reports = harness.lower_bound_check(
        n_grid=p["n_grid"], p_norms=p["p_norms"], mc_paths=config.paths or 4000,
        n_max=p["n_max"], alpha=p["alpha"], master_seed=config.seed,
        threads=config.threads)
    rows, summary = _reports_to_artifacts(
        {f"lower_bound_p{p_}": rep for p_, rep in reports.items()}, "n")
    return summary, rows, ["label", "abscissa", "estimate", "std_error"]


def _run_fiber(config: ExperimentConfig, out_dir: Path):
    p = config.params
    params = appfiber.FiberParams(
        sigma=p["sigma"], gammas=tuple(p["gammas"]), alpha=p["alpha"],
        z_minus=p["z_minus"], z_plus=p["z_plus"], t_star=p["t_star"], q=p["q"],
        theta0=p["theta0"])
    rep = appfiber.run_fiber_pdf(
        params, n=p["n"], eps=p.get("eps"), horizon=p["horizon"],
        mc_paths=config.paths or 100_000, snapshot_times=p["snapshots"],
        master_seed=config.seed, threads=config.threads,
        gaussian_control=p["control"])
    rows = []
    for snap in rep.snapshots:
        rows.extend((c, d, snap.t) for c, d in zip(snap.bin_centers, snap.density))
    summary = {"reports": {}, "fiber": rep.to_dict()}
    return summary, rows, ["bin_center", "density", "snapshot_t"]


def _reports_to_artifacts(reports: dict, kind: str):
    rows = []
    summary = {"reports": {}}
    for label in sorted(reports):
        rep = reports[label]
        for a, e, s in zip(rep.abscissae, rep.estimates, rep.std_errors):
            rows.append((label, a, e, s))
        summary["reports"][label] = rep.to_dict()
        summary["reports"][label]["abscissa_kind"] = kind
    return rows, summary


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
