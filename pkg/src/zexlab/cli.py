"""Batch experiment runner.

Every checker is a subcommand; configuration comes from a flat key=value
text file (one key per line, ``#`` comments) optionally overridden by flags.
Outputs are plot-ready CSV plus a human-readable summary; reruns with the
same configuration produce byte-identical CSV bodies, and the only timestamp
lives in a separate metadata file.

Function expressions use the grammar ``tag key=value key=value ...``:

    const value=C            constant C on the cube
    linear                   sum of the coordinates
    indicator lo=A hi=B      indicator of the box [A,B]^d
    cusp alpha=A center=C    product over axes of |x_i - C|^A,  0 < A < 1
    boundary-power alpha=A   (x_1)^A
    random level=K seed=S    seeded piecewise constant on the level-K cells
    tensor base=TAG ...      product of the base tag's 1-d profile per axis

Exit codes: 0 success, 1 a verification gate failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import acceptance, adaptive, besov, dyadic, kernels, moduli
from .grid import parse_spec, sample, zero_extend

_KNOWN_KEYS = {
    "function", "d", "L", "p", "q", "kernel", "window", "epsilons", "kind",
    "out", "seed", "beta", "tail", "cases", "levels", "epsilon",
}
_INT_KEYS = {"d", "L", "seed", "cases"}
_FLOAT_KEYS = {"q", "beta", "tail", "epsilon"}
_LIST_KEYS = {"p", "epsilons", "levels"}


class ConfigError(Exception):
    pass


def parse_config_text(text: str) -> dict:
    config = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in config:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        config[key] = value
    return config


def _coerce(config: dict) -> dict:
    out = {}
    for key, value in config.items():
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _LIST_KEYS:
                out[key] = tuple(float(v) for v in value.split(","))
            elif key == "window":
                lo, hi = value.split(":")
                out[key] = (float(lo), float(hi))
            else:
                out[key] = value
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})")
    return out


def load_config(args) -> dict:
    config = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        config = parse_config_text(path.read_text())
    config = _coerce(config)
    if args.out:
        config["out"] = args.out
    if args.seed is not None:
        config["seed"] = args.seed
    if args.window:
        lo, hi = args.window.split(":")
        config["window"] = (float(lo), float(hi))
    return config


def _require(config, *keys):
    missing = [k for k in keys if k not in config]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")


def _outdir(config) -> Path:
    out = Path(config.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(out: Path, name: str, body: str):
    (out / name).write_text(body)


def _write_meta(out: Path, config: dict):
    lines = [f"generated_unix={time.time()!r}"]
    for key in sorted(config):
        lines.append(f"{key}={config[key]}")
    _write(out, "run_meta.txt", "\n".join(lines) + "\n")


def _function(config):
    _require(config, "function", "d", "L")
    spec = parse_spec(config["function"])  # random specs carry their own seed
    return sample(spec, config["d"], config["L"]), spec


def _t_grid(config, level):
    if "window" in config:
        lo, hi = config["window"]
        grid = [2.0 ** (-j) for j in range(level, -1, -1)
                if lo * (1 - 1e-12) <= 2.0 ** (-j) <= hi * (1 + 1e-12)]
        if not grid:
            raise ConfigError("window contains no dyadic scales")
        return tuple(grid)
    return moduli.default_t_grid(level)


def cmd_modulus(config) -> int:
    f, spec = _function(config)
    kind = config.get("kind", "interior")
    grid = _t_grid(config, f.level)
    out = _outdir(config)
    for p in config.get("p", (2.0,)):
        if kind == "interior":
            curve = moduli.interior_curve(f, p, grid, name=spec.describe())
        elif kind == "whole":
            g = zero_extend(f, max(1, int(max(grid) * f.n)))
            curve = moduli.whole_curve(g, p, grid, name=spec.describe())
        elif kind == "hybrid":
            curve = moduli.hybrid_curve(f, p, grid, name=spec.describe())
        else:
            raise ConfigError(f"unknown modulus kind {kind!r}")
        _write(out, f"modulus_{kind}_p{p:g}.csv", curve.to_csv())
    _write_meta(out, config)
    return 0


def cmd_hybrid(config) -> int:
    config = dict(config)
    config["kind"] = "hybrid"
    return cmd_modulus(config)


def cmd_dyadic(config) -> int:
    f, spec = _function(config)
    out = _outdir(config)
    rows = ["p,N,error,bound,constant,pass"]
    ok = True
    for p in config.get("p", (2.0,)):
        for n_level in range(0, f.level - 1):
            err, bound, constant = dyadic.average_error_report(f, n_level, p)
            good = err <= bound + 1e-12
            ok = ok and good
            rows.append(f"{p!r},{n_level},{err!r},{bound!r},{constant!r},"
                        f"{'true' if good else 'false'}")
    _write(out, "average_error.csv", "\n".join(rows) + "\n")
    _write_meta(out, config)
    return 0 if ok else 1


def cmd_shift_bound(config) -> int:
    out = _outdir(config)
    rows = dyadic.shift_bound_suite(
        n_functions=int(config.get("cases", 100)),
        seed=int(config.get("seed", acceptance.DEFAULT_SEED)))
    _write(out, "shift_bound_suite.csv", dyadic.suite_to_csv(rows))
    _write_meta(out, config)
    return 0 if all(r["pass"] for r in rows) else 1


def cmd_adaptive(config) -> int:
    f, spec = _function(config)
    p = config.get("p", (2.0,))[0]
    q = config.get("q", 2.0)
    out = _outdir(config)
    if "epsilon" in config:
        eps_list = (config["epsilon"],)
    else:
        eps_list = config.get("epsilons") or adaptive.default_epsilons(f, p)
    pyramid = adaptive.ErrorPyramid(f, p)
    for eps in eps_list:
        part = adaptive.build_partition(f, p, eps, pyramid)
        problems = adaptive.verify_partition(part, f)
        if problems:
            print("\n".join(problems), file=sys.stderr)
            return 1
        _write(out, f"partition_eps{eps:g}.txt", part.to_text())
    report = adaptive.count_bound_report(f, p, q, eps_list)
    _write(out, "count_scaling.csv", report.to_csv())
    _write_meta(out, config)
    return 0


def cmd_kernel_error(config) -> int:
    f, spec = _function(config)
    family = config.get("kernel", "gauss")
    tail = config.get("tail", 1e-6 if family == "gauss" else 1e-3)
    grid = _t_grid(config, f.level)
    out = _outdir(config)
    for p in config.get("p", (2.0,)):
        curve = kernels.error_curve(family, f, p, grid, truncation_tail=tail,
                                    name=spec.describe())
        _write(out, f"kernel_error_{family}_p{p:g}.csv", curve.to_csv())
    _write_meta(out, config)
    return 0


def cmd_besov_fit(config) -> int:
    f, spec = _function(config)
    grid = _t_grid(config, f.level)
    window = config.get("window", besov.default_fit_window(f.level))
    out = _outdir(config)
    lines = []
    for p in config.get("p", (2.0,)):
        zc = moduli.interior_curve(f, p, grid, name=spec.describe())
        fit = besov.fit_exponent(zc, window)
        lines.append(f"p={p:g} kind=interior slope={fit.slope!r} "
                     f"intercept={fit.intercept!r} residual_rms={fit.residual_rms!r} "
                     f"n={fit.n_points}")
    _write(out, "besov_fit.txt", "\n".join(lines) + "\n")
    _write_meta(out, config)
    print("\n".join(lines))
    return 0


def cmd_exponent_drop(config) -> int:
    f, spec = _function(config)
    out = _outdir(config)
    lines = []
    ok = True
    for p in config.get("p", (2.0,)):
        rep = besov.exponent_drop_check(f, p, window=config.get("window"),
                                        name=spec.describe())
        ok = ok and rep.passed
        lines.append(f"p={p:g} alpha={rep.alpha.slope!r} beta={rep.beta.slope!r} "
                     f"beta_predicted={rep.beta_predicted!r} "
                     f"pass={'true' if rep.passed else 'false'}")
    _write(out, "exponent_drop.txt", "\n".join(lines) + "\n")
    _write_meta(out, config)
    print("\n".join(lines))
    return 0 if ok else 1


def cmd_embedding(config) -> int:
    _require(config, "function", "d")
    spec = parse_spec(config["function"])
    levels = [int(v) for v in config.get("levels", (10, 11, 12))]
    p = config.get("p", (2.0,))[0]
    q = config.get("q", 2.0)
    out = _outdir(config)
    rep = besov.besov_embedding_check(spec, config["d"], p, q, levels)
    lines = [f"alpha={rep.alpha!r}", f"beta={rep.beta!r}", f"r={rep.r!r}",
             f"stabilization={rep.stabilization!r}"]
    for L, semi, dom, ratio in zip(rep.levels, rep.seminorms,
                                   rep.domain_seminorms, rep.interp_ratios):
        lines.append(f"L={L} extension_seminorm={semi!r} "
                     f"interior_seminorm={dom!r} interp_ratio={ratio!r}")
    _write(out, "embedding.txt", "\n".join(lines) + "\n")
    _write_meta(out, config)
    print("\n".join(lines))
    return 0


def cmd_verify(config) -> int:
    out = _outdir(config)
    seed = int(config.get("seed", acceptance.DEFAULT_SEED))
    results = acceptance.run_all(seed)
    all_ok = True
    for result in results:
        print(result.line())
        all_ok = all_ok and result.passed and result.in_budget
        for name, body in result.artifacts.items():
            _write(out, name, body)
    _write_meta(out, config)
    return 0 if all_ok else 1


_COMMANDS = {
    "modulus": cmd_modulus,
    "hybrid": cmd_hybrid,
    "dyadic": cmd_dyadic,
    "shift-bound": cmd_shift_bound,
    "adaptive": cmd_adaptive,
    "kernel-error": cmd_kernel_error,
    "besov-fit": cmd_besov_fit,
    "exponent-drop": cmd_exponent_drop,
    "embedding": cmd_embedding,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zexlab",
        description="Batch runner for the zero-extension smoothness laboratory.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--window", help="fit window as tmin:tmax")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
