"""Command-line frontend.

Configs are flat ``key = value`` text files (one pair per line, ``#`` starts a
comment); any key can be overridden on the command line with ``--key value``.
Artifacts (CSV densities, JSON reports) land in ``output_dir``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

from .density import export_density_csv
from .diagnostics import (
    assumption_diagnostics,
    export_comparison_csv,
    gaussian_stationary_density,
    hn_baseline,
    invariance_residual,
    make_error_report,
    mcmc_histogram,
    rate_study,
)
from .discretize import GaussLegendre, Midpoint, dump_matrix_csv
from .grid import build_partition
from .innovations import Exponential, Gaussian, Uniform
from .invariant import NoConvergence, SingularSystem
from .kernels import (
    Ar1Kernel,
    ArchKernel,
    ConstantKernel,
    EndpointMin,
    Sampled,
    iterated_ar1,
)
from .pipeline import run_pipeline

COMMANDS = ("build", "errors", "invariance", "rate", "diagnose", "baseline", "mcmc")
MODELS = ("ar1", "ar1_iter3", "arch1", "constant")
INNOVATIONS = ("gaussian", "exponential", "uniform")
ITER_CONV_MESH = 1e-3  # tabulation mesh for the 3-step innovation convolution


class ConfigError(ValueError):
    """Bad key, bad value, or missing required key."""


@dataclass
class RunConfig:
    """Resolved run configuration: defaults, then config file, then flags."""

    command: str
    model: str = "ar1"
    rho: float | None = None
    alpha: float | None = None
    beta: float | None = None
    lam: float | None = None
    innovation: str = "gaussian"
    sigma: float = 1.0
    rate: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    m: float | None = None
    k_minus: float | None = None
    k_plus: float | None = None
    delta: float | None = None
    deltas: str | None = None
    quadrature: str = "gauss5"
    inf_strategy: str | None = None
    solver: str = "auto"
    j0: int | None = None
    output_dir: str = "."
    seed: int = 0
    threads: int = 0
    n_iters: int = 30
    n_samples: int = 1_000_000
    dump_matrix: bool = False


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


_KEY_PARSERS = {
    "model": str,
    "rho": float,
    "alpha": float,
    "beta": float,
    "lambda": float,
    "innovation": str,
    "sigma": float,
    "rate": float,
    "lo": float,
    "hi": float,
    "m": float,
    "k_minus": float,
    "k_plus": float,
    "delta": float,
    "deltas": str,
    "quadrature": str,
    "inf_strategy": str,
    "solver": str,
    "j0": int,
    "output_dir": str,
    "seed": int,
    "threads": int,
    "n_iters": int,
    "n_samples": int,
    "dump_matrix": _parse_bool,
}

_FIELD_FOR_KEY = {"lambda": "lam"}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the flat key = value grammar into raw string pairs."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        pairs[key.strip()] = val.strip()
    return pairs


def resolve_config(command: str, *pair_dicts: dict[str, str]) -> RunConfig:
    """Apply raw string pairs over the defaults, later dicts winning."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    cfg = RunConfig(command=command)
    for pairs in pair_dicts:
        for key, raw in pairs.items():
            parser = _KEY_PARSERS.get(key)
            if parser is None:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                value = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for key {key!r}: {exc}") from None
            setattr(cfg, _FIELD_FOR_KEY.get(key, key), value)
    return cfg


def config_echo(cfg: RunConfig) -> dict:
    echo = dataclasses.asdict(cfg)
    echo["lambda"] = echo.pop("lam")
    return echo


def _require(cfg: RunConfig, *keys: str):
    for key in keys:
        if getattr(cfg, _FIELD_FOR_KEY.get(key, key)) is None:
            raise ConfigError(f"command {cfg.command!r} requires config key {key!r}")


def build_innovation(cfg: RunConfig):
    kw = {}
    if cfg.m is not None:
        if cfg.m <= 0:
            raise ConfigError("m must be positive")
        kw["moment_order"] = cfg.m
    try:
        if cfg.innovation == "gaussian":
            return Gaussian(sigma=cfg.sigma, **kw)
        if cfg.innovation == "exponential":
            return Exponential(rate=cfg.rate, **kw)
        if cfg.innovation == "uniform":
            return Uniform(lo=cfg.lo, hi=cfg.hi, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(
        f"unknown innovation {cfg.innovation!r}; expected one of {INNOVATIONS}"
    )


def build_model(cfg: RunConfig):
    innov = build_innovation(cfg)
    try:
        if cfg.model == "ar1":
            _require(cfg, "rho")
            return Ar1Kernel(rho=cfg.rho, innov=innov)
        if cfg.model == "ar1_iter3":
            _require(cfg, "rho")
            return iterated_ar1(innov, cfg.rho, ell=3, mesh=ITER_CONV_MESH)
        if cfg.model == "arch1":
            _require(cfg, "alpha", "beta", "lambda")
            return ArchKernel(
                alpha=cfg.alpha, beta=cfg.beta, lam=cfg.lam, innov=innov,
                drift_exponent=cfg.m if cfg.m is not None else 1.0,
            )
        if cfg.model == "constant":
            return ConstantKernel(innov=innov)
    except (ValueError, ConfigError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown model {cfg.model!r}; expected one of {MODELS}")


def parse_quadrature(text: str):
    if text == "midpoint":
        return Midpoint()
    if text.startswith("gauss"):
        try:
            return GaussLegendre(int(text[len("gauss"):]))
        except ValueError:
            pass
    raise ConfigError(f"unknown quadrature {text!r}; expected gauss<n> or midpoint")


def parse_strategy(text: str | None):
    if text is None:
        return None
    if text == "endpoint":
        return EndpointMin()
    if text.startswith("sampled:"):
        try:
            return Sampled(int(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise ConfigError(f"unknown inf_strategy {text!r}; expected endpoint or sampled:<n>")


def parse_solver(text: str) -> tuple[str, float]:
    if text in ("auto", "direct", "power"):
        return text, 1e-12
    if text.startswith("power:"):
        try:
            return "power", float(text.split(":", 1)[1])
        except ValueError:
            pass
    raise ConfigError(f"unknown solver {text!r}; expected auto, direct or power[:<tol>]")


def _resolve_exact(cfg: RunConfig):
    """Closed-form stationary target, available for gaussian AR models and
    constant kernels (whose stationary law is the innovation itself)."""
    if cfg.model == "constant":
        return build_innovation(cfg)
    if cfg.model in ("ar1", "ar1_iter3") and cfg.innovation == "gaussian":
        _require(cfg, "rho")
        return gaussian_stationary_density(cfg.rho, cfg.sigma)
    return None


def _threads(cfg: RunConfig) -> int:
    return cfg.threads if cfg.threads > 0 else (os.cpu_count() or 1)


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_density_command(cfg: RunConfig) -> int:
    _require(cfg, "k_minus", "k_plus", "delta")
    model = build_model(cfg)
    partition = build_partition(cfg.k_minus, cfg.k_plus, cfg.delta)
    quad = parse_quadrature(cfg.quadrature)
    strategy = parse_strategy(cfg.inf_strategy) or model.default_strategy()
    solver, tol = parse_solver(cfg.solver)
    exact = None
    if cfg.command == "errors":
        exact = _resolve_exact(cfg)
        if exact is None:
            raise ConfigError(
                "errors requires a closed-form target: gaussian ar1/ar1_iter3 "
                "or a constant model"
            )
    result = run_pipeline(
        model, partition, j0=cfg.j0, quad=quad, strategy=strategy,
        solver=solver, solver_tol=tol, threads=_threads(cfg),
    )
    if cfg.inf_strategy is None:
        cfg.inf_strategy = "endpoint" if isinstance(strategy, EndpointMin) else f"sampled:{strategy.n}"
    cfg.j0 = result.chain.j0
    report = make_error_report(
        result, exact=exact, with_invariance=cfg.command == "invariance",
        config=config_echo(cfg),
    )
    out = cfg.output_dir
    export_density_csv(result.density, os.path.join(out, "density.csv"),
                       exact=exact.pdf if exact is not None else None)
    if exact is not None:
        export_comparison_csv(result.density, exact, os.path.join(out, "comparison.csv"))
    if cfg.dump_matrix:
        dump_matrix_csv(result.chain, os.path.join(out, "matrix.csv"))
    _write_json(os.path.join(out, "report.json"), dataclasses.asdict(report))
    return 0


def _run_rate(cfg: RunConfig) -> int:
    _require(cfg, "k_minus", "k_plus", "deltas")
    model = build_model(cfg)
    try:
        deltas = [float(tok) for tok in cfg.deltas.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad deltas list: {exc}") from None
    if not deltas:
        raise ConfigError("deltas must list at least one mesh")
    quad = parse_quadrature(cfg.quadrature)
    strategy = parse_strategy(cfg.inf_strategy)
    solver, _ = parse_solver(cfg.solver)
    study = rate_study(
        model, cfg.k_minus, cfg.k_plus, deltas, exact=_resolve_exact(cfg),
        quad=quad, strategy=strategy, solver=solver, threads=_threads(cfg),
    )
    for d, msg in study.failures.items():
        print(f"rate: mesh {d} failed: {msg}", file=sys.stderr)

    def _fmt(v):
        return "" if v is None else f"{v:.12e}"

    with open(os.path.join(cfg.output_dir, "rate.csv"), "w") as fh:
        fh.write("delta,sup_error,l1_riemann,invariance_residual,slope\n")
        for rep in study.reports:
            fh.write(
                f"{rep.config['delta']:.12e},{_fmt(rep.sup_error)},"
                f"{_fmt(rep.l1_riemann)},{_fmt(rep.invariance_residual)},"
                f"{_fmt(study.slope)}\n"
            )
    return 0 if study.reports else 2


def _run_diagnose(cfg: RunConfig) -> int:
    _require(cfg, "k_minus", "k_plus", "delta")
    model = build_model(cfg)
    partition = build_partition(cfg.k_minus, cfg.k_plus, cfg.delta)
    report = assumption_diagnostics(
        model, partition, mc_samples=cfg.n_samples,
        quad=parse_quadrature(cfg.quadrature), seed=cfg.seed,
    )
    payload = dataclasses.asdict(report)
    payload["config"] = config_echo(cfg)
    _write_json(os.path.join(cfg.output_dir, "assumptions.json"), payload)
    return 0


def _run_baseline(cfg: RunConfig) -> int:
    _require(cfg, "rho", "k_minus", "k_plus", "delta")
    innov = build_innovation(cfg)
    partition = build_partition(cfg.k_minus, cfg.k_plus, cfg.delta)
    if cfg.n_iters < 0:
        raise ConfigError("n_iters must be >= 0")
    hn = hn_baseline(innov, cfg.rho, cfg.n_iters, partition)
    hn.to_csv(os.path.join(cfg.output_dir, "hn.csv"))
    return 0


def _run_mcmc(cfg: RunConfig) -> int:
    _require(cfg, "k_minus", "k_plus", "delta")
    model = build_model(cfg)
    partition = build_partition(cfg.k_minus, cfg.k_plus, cfg.delta)
    hist = mcmc_histogram(model, cfg.n_samples, partition, cfg.seed)
    hist.to_csv(os.path.join(cfg.output_dir, "hist.csv"))
    return 0


_DISPATCH = {
    "build": _run_density_command,
    "errors": _run_density_command,
    "invariance": _run_density_command,
    "rate": _run_rate,
    "diagnose": _run_diagnose,
    "baseline": _run_baseline,
    "mcmc": _run_mcmc,
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved config: 0 on success, 1 on validation or I/O
    problems, 2 on numerical failure."""
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
        return _DISPATCH[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NoConvergence, SingularSystem) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _collect_overrides(rest: list[str]) -> dict[str, str]:
    pairs: dict[str, str] = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError(f"expected --key value, got {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"flag --{key} is missing a value")
            val = rest[i + 1]
            i += 1
        pairs[key] = val
        i += 1
    return pairs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="stationary-kernel",
        description="Approximate stationary densities of 1-D Markov chains by "
        "kernel discretization.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value config file")
    args, rest = parser.parse_known_args(argv)
    try:
        file_pairs = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    file_pairs = parse_config_text(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        overrides = _collect_overrides(rest)
        cfg = resolve_config(args.command, file_pairs, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
