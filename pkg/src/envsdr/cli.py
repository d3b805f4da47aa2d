"""Command-line entry point: ``envsdr {sim,fit,select-dim,tune,pima}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import ast
import itertools
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dimension import DEFAULT_XI_GRID, bic_rank, default_penalty, select_d, select_d_direct
from .errors import (
    BootstrapDegenerate,
    ConfigError,
    DegenerateSpectrum,
    EmptyData,
    InvalidInput,
    NotPSD,
    ParseError,
    SliceTooSmall,
    TooManySlices,
)
from .estimator import (
    TWO_STAGE_NAIVE,
    direct_estimate,
    envelope_basis,
    two_stage_estimate,
)
from .io import PIMA_SCHEMA, PIMA_ZERO_AS_MISSING, fmt, ingest_csv, load_pima, write_matrix_csv
from .kernels import SAVE, SIR, KernelConfig, build_kernels
from .linalg import trace_correlation
from .simgen import MethodConfig, ModelSpec, run_study, truth_bases, write_study
from .tuning import benchmark_psir_qda, qda_loo_accuracy, tune_by_bootstrap, tune_by_loo

log = logging.getLogger("envsdr")

COMMANDS = ("sim", "fit", "select-dim", "tune", "pima")
PIMA_W_SLICES = 3


@dataclass
class RunConfig:
    command: str = "fit"
    input: str | None = None
    out_dir: str = "."
    y: str | None = None
    x: list = field(default_factory=list)
    w: list = field(default_factory=list)
    missing_zero: list = field(default_factory=list)
    yz_method: str = SIR
    h_y: int | None = 10
    h_w: int | None = 2
    h_inner: int | None = 3
    xi_grid: list = field(default_factory=lambda: list(DEFAULT_XI_GRID))
    cn_multiplier: float = 1.0
    seed: int = 0
    replicates: int = 200
    bootstrap: int = 100
    normalize: bool = False
    nu_min: int | None = None
    nu_max: int | None = None
    n_components: int | None = None
    threads: int = 1
    # simulation grid
    recipe: str | None = None
    models: list = field(default_factory=lambda: ["M1"])
    a: list = field(default_factory=lambda: [1.0])
    b: list = field(default_factory=lambda: [0.1])
    n: int = 150
    p: int = 9
    sigma: float = 0.5
    cn_multipliers: list = field(default_factory=lambda: [1.0])
    estimate: bool = True
    select: bool = True
    truth_model: dict | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.yz_method not in (SIR, SAVE):
            raise ConfigError("yz_method must be SIR or SAVE")
        for name in ("h_y", "h_w", "h_inner"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"{name} must be a positive integer or null")
        if not self.xi_grid or any(not 0 < float(v) < 1 for v in self.xi_grid):
            raise ConfigError("xi_grid values must lie in (0, 1)")
        if self.cn_multiplier <= 0 or any(m <= 0 for m in self.cn_multipliers):
            raise ConfigError("penalty multipliers must be positive")
        if self.replicates < 1 or self.bootstrap < 2:
            raise ConfigError("need replicates >= 1 and bootstrap >= 2")
        if any(m not in ("M1", "M2") for m in self.models):
            raise ConfigError(f"unknown model id in {self.models}")
        return self

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(self.yz_method, self.h_y, self.h_w, self.h_inner, self.normalize)


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines (TOML- or INI-style); section headers are ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        val = {"true": "True", "false": "False", "null": "None", "none": "None"}.get(val, val)
        try:
            out[key] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            out[key] = val.strip("'\"")
    return out


def make_config(values: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    cfg = RunConfig(**values)
    if isinstance(cfg.x, str):
        cfg.x = [cfg.x]
    if isinstance(cfg.w, str):
        cfg.w = [cfg.w]
    for key in ("a", "b", "models", "cn_multipliers"):
        v = getattr(cfg, key)
        if not isinstance(v, (list, tuple)):
            setattr(cfg, key, [v])
    return cfg.validate()


# ---------------------------------------------------------------------------
# commands


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _load(cfg: RunConfig):
    if not cfg.input:
        raise ConfigError("this command needs --input")
    if not cfg.y or not cfg.x:
        raise ConfigError("set the column roles y and x")
    schema = {"y": cfg.y, "x": cfg.x, "w": cfg.w}
    data = ingest_csv(cfg.input, schema, {"zero_as_missing": cfg.missing_zero})
    log.info("read %d rows (%d dropped)", data.n, data.n_dropped)
    if data.n <= data.p:
        raise NotPSD(f"n={data.n} <= p={data.p}: the sample covariance is singular; "
                     "reduce the covariates or add a ridge before standardizing")
    return data


def _nu_range(cfg: RunConfig, d: int, d_env: int, p: int) -> range:
    lo = cfg.nu_min if cfg.nu_min is not None else d
    hi = cfg.nu_max if cfg.nu_max is not None else min(p, max(d_env, lo) + 2)
    if not 1 <= lo <= hi <= p:
        raise ConfigError(f"invalid nu range {lo}..{hi} for p={p}")
    return range(lo, hi + 1)


def cmd_sim(cfg: RunConfig) -> dict:
    if cfg.recipe == "selection":
        grid = [ModelSpec(m, cfg.p, a, b, cfg.sigma, cfg.n)
                for m in ("M1", "M2") for a, b in ((1, 0.1), (1, 0.3), (3, 0.1), (3, 0.3))]
        method = MethodConfig(tuple(cfg.xi_grid), (0.5, 1.0, 2.0), cfg.bootstrap,
                              estimate=False, select=True)
    elif cfg.recipe not in (None, "grid"):
        raise ConfigError(f"unknown recipe {cfg.recipe!r}")
    else:
        try:
            grid = [ModelSpec(m, cfg.p, float(a), float(b), cfg.sigma, cfg.n)
                    for m, a, b in itertools.product(cfg.models, cfg.a, cfg.b)]
        except InvalidInput as exc:
            raise ConfigError(str(exc)) from None
        method = MethodConfig(tuple(cfg.xi_grid), tuple(cfg.cn_multipliers), cfg.bootstrap,
                              estimate=cfg.estimate, select=cfg.select)
    cells = run_study(grid, cfg.replicates, cfg.seed, method, n_jobs=cfg.threads)
    out = _out(cfg)
    write_study(cells, out / "study.csv", out / "study.json", asdict(cfg))
    return {"cells": len(cells), "csv": str(out / "study.csv")}


def cmd_select_dim(cfg: RunConfig) -> dict:
    data = _load(cfg)
    ks = build_kernels(data.y, data.x, data.w, cfg.kernel_config())
    c_n = default_penalty(data.n, cfg.cn_multiplier)
    rep = {"n": data.n, "p": data.p, "c_n": c_n,
           "d_tilde": select_d_direct(ks.k_yz, data.n, c_n)}
    if ks.has_w:
        sel = select_d(ks.k_yz, ks.hybrid, cfg.xi_grid, data.n, c_n)
        rep.update(d_hat=sel.d, d_env_hat=sel.d_env,
                   d_by_xi={fmt(k): v for k, v in sel.d_by_xi.items()},
                   d_env_by_xi={fmt(k): v for k, v in sel.d_env_by_xi.items()})
    _write_json(_out(cfg) / "dimensions.json", rep)
    return rep


def _tune(cfg, data, ks, d, d_env):
    nus = _nu_range(cfg, d, d_env, data.p)
    if cfg.h_y is None:
        return tune_by_loo(data.y, data.x, data.w, cfg.kernel_config(), nus, cfg.xi_grid,
                           n_components=d, kernels=ks)
    return tune_by_bootstrap(data.y, data.x, data.w, cfg.kernel_config(), nus, cfg.xi_grid,
                             d=d, m=cfg.bootstrap, seed=cfg.seed, kernels=ks)


def cmd_tune(cfg: RunConfig) -> dict:
    data = _load(cfg)
    if data.w is None:
        raise InvalidInput("tuning (nu, xi) needs an auxiliary variable W")
    ks = build_kernels(data.y, data.x, data.w, cfg.kernel_config())
    c_n = default_penalty(data.n, cfg.cn_multiplier)
    sel = select_d(ks.k_yz, ks.hybrid, cfg.xi_grid, data.n, c_n)
    d = cfg.n_components or sel.d
    rep = _tune(cfg, data, ks, d, sel.d_env)
    out = _out(cfg)
    write_matrix_csv(out / "tuning.csv", ["nu", "xi", "score"],
                     [[nu, float(xi), float(s)] for nu, xi, s in rep.candidates])
    res = {"chosen_nu": rep.chosen[0], "chosen_xi": rep.chosen[1],
           "score_kind": rep.score_kind, "score": rep.score_of(rep.chosen), "d": d}
    _write_json(out / "tuning.json", res)
    return res


def cmd_fit(cfg: RunConfig) -> dict:
    data = _load(cfg)
    ks = build_kernels(data.y, data.x, data.w, cfg.kernel_config())
    n, p = data.n, data.p
    c_n = default_penalty(n, cfg.cn_multiplier)
    out = _out(cfg)
    d_tilde = select_d_direct(ks.k_yz, n, c_n)
    report = {"n": n, "p": p, "n_dropped": data.n_dropped, "c_n": c_n, "d_tilde": d_tilde,
              "eigenvalues_k_yz": ks.k_yz.eigenvalues()}
    estimates = {}
    if ks.has_w:
        sel = select_d(ks.k_yz, ks.hybrid, cfg.xi_grid, n, c_n)
        d = cfg.n_components or sel.d
        report.update(d_hat=sel.d, d_env_hat=sel.d_env)
        rep = _tune(cfg, data, ks, d, sel.d_env)
        nu, xi = rep.chosen
        estimates["hybrid"] = two_stage_estimate(
            ks.k_yz, envelope_basis(ks.hybrid(xi), nu), d, ks.data.sigma_inv_sqrt, xi=xi)
        nu0 = min(p, max(d, bic_rank(ks.k_joint.eigenvalues(), n, c_n)))
        estimates["naive"] = two_stage_estimate(
            ks.k_yz, envelope_basis(ks.k_joint, nu0), d, ks.data.sigma_inv_sqrt,
            method=TWO_STAGE_NAIVE)
        report.update(nu=nu, xi=xi, nu_naive=nu0, tuning_kind=rep.score_kind)
    else:
        d = cfg.n_components or d_tilde
        report["notice"] = "no auxiliary variable: two-stage estimates skipped"
        log.warning(report["notice"])
    estimates["direct"] = direct_estimate(ks.k_yz, d, ks.data.sigma_inv_sqrt)
    report["d"] = d

    for name, est in estimates.items():
        for scale, basis in (("z", est.basis_z), ("x", est.basis_x)):
            write_matrix_csv(out / f"basis_{name}_{scale}.csv",
                             ["variable"] + [f"dir{j + 1}" for j in range(d)],
                             [[v, *map(float, row)] for v, row in zip(data.x_names, basis.columns)])
        report[f"eigenvalues_{name}"] = est.eigenvalues_used
    if cfg.truth_model:
        truth = truth_bases(ModelSpec(**cfg.truth_model))
        if truth.d_true == d:
            report["trace_correlation_vs_truth"] = {
                name: trace_correlation(est.basis_x, truth.s_yx) for name, est in estimates.items()}
    report["config"] = asdict(cfg)
    _write_json(out / "fit.json", report)
    return report


def cmd_pima(cfg: RunConfig) -> dict:
    """Pima workflow: SAVE for Y|Z, PSIR + W-SIR envelope, QDA leave-one-out tuning."""
    if cfg.input:
        data = ingest_csv(cfg.input, PIMA_SCHEMA if not cfg.y else
                          {"y": cfg.y, "x": cfg.x, "w": cfg.w},
                          {"zero_as_missing": cfg.missing_zero or PIMA_ZERO_AS_MISSING})
    else:
        data = load_pima()
    if data.w is None:
        raise InvalidInput("the Pima workflow needs an auxiliary variable W; use the fit command")
    kc = KernelConfig(SAVE, None, cfg.h_w, None, cfg.normalize)
    ks = build_kernels(data.y, data.x, data.w, kc)
    k = cfg.n_components or 2
    nus = range(cfg.nu_min or k, (cfg.nu_max or data.p) + 1)
    rep = tune_by_loo(data.y, data.x, data.w, kc, nus, cfg.xi_grid, n_components=k, kernels=ks)
    nu, xi = rep.chosen
    hyb3 = two_stage_estimate(ks.k_yz, envelope_basis(ks.hybrid(xi), nu), min(3, nu),
                              ks.data.sigma_inv_sqrt, xi=xi)
    dir3 = direct_estimate(ks.k_yz, 3, ks.data.sigma_inv_sqrt)
    s_hat = hyb3.scores(ks.data.z)
    s_tilde = dir3.scores(ks.data.z)
    report = {
        "n": data.n,
        "n_dropped": data.n_dropped,
        "chosen_nu": nu,
        "chosen_xi": xi,
        "loo_ca_two_stage": rep.score_of(rep.chosen),
        "loo_ca_direct_2": qda_loo_accuracy(s_tilde[:, :2], data.y),
        "loo_ca_direct_3": qda_loo_accuracy(s_tilde[:, :3], data.y),
        "loo_ca_benchmark": benchmark_psir_qda(data.y, data.x, data.w, kc, kernels=ks),
        "h_w": cfg.h_w,
        "version": __version__,
    }
    out = _out(cfg)
    header = ["subject", "y", "w"] + [f"S_hat{j + 1}" for j in range(s_hat.shape[1])] \
        + [f"S_tilde{j + 1}" for j in range(3)]
    rows = [[i + 1, float(data.y[i]), float(data.w[i, 0]), *map(float, s_hat[i]),
             *map(float, s_tilde[i])] for i in range(data.n)]
    write_matrix_csv(out / "pima_components.csv", header, rows)
    write_matrix_csv(out / "pima_tuning.csv", ["nu", "xi", "loo_ca"],
                     [[a, float(b), float(c)] for a, b, c in rep.candidates])
    _write_json(out / "pima_report.json", report)
    return report


HANDLERS = {"sim": cmd_sim, "fit": cmd_fit, "select-dim": cmd_select_dim,
            "tune": cmd_tune, "pima": cmd_pima}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="envsdr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--input")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config field, e.g. --set h_w=3")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if args.config.endswith(".json"):
            try:
                loaded = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad JSON config: {exc}") from None
            # a run's metadata sidecar echoes its config under "config"
            values.update(loaded.get("config", loaded))
        else:
            values.update(parse_config_text(text))
    for item in args.set:
        values.update(parse_config_text(item))
    for key, attr in (("seed", "seed"), ("out_dir", "out_dir"), ("threads", "threads"),
                      ("input", "input")):
        v = getattr(args, attr)
        if v is not None:
            values[key] = v
    if values.get("command", args.command) != args.command:
        values.pop("command")
    values["command"] = args.command
    if args.command == "pima":
        values.setdefault("h_w", PIMA_W_SLICES)
    return make_config(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        result = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, EmptyData, InvalidInput, TooManySlices, SliceTooSmall,
            FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NotPSD, DegenerateSpectrum, BootstrapDegenerate, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    print(json.dumps(result, indent=2, default=_json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
