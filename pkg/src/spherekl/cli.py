"""Command-line interface: simulate, bound, table, verify, bench, kernel-grid.

Every option can also come from an INI-style config file (``--config``),
one section per subcommand; flags given on the command line win.  Exit
status is 0 on success, 2 on a configuration error and 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import bounds, kernel, simulator, spectra, verify
from ._io import atomic_write, fmt
from .specfun import SphereTimePoint

THREADS_ENV = "SPHEREKL_THREADS"
SUBCOMMANDS = ("simulate", "bound", "table", "verify", "bench", "kernel-grid")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending option."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# ---------------------------------------------------------------------------
# option schema
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _scenarios(text: str) -> list[tuple[float, ...]]:
    return [tuple(float(x) for x in item.split(":")) for item in text.split(",") if item.strip()]


def _show(value) -> str:
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], tuple):
            return ",".join(":".join(fmt(x) for x in v) for v in value)
        return ",".join(_show(v) for v in value)
    if isinstance(value, float):
        return fmt(value)
    return str(value)


@dataclass(frozen=True)
class Option:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    choices: tuple | None = None


def _opts(*items: Option) -> dict[str, Option]:
    return {o.name: o for o in items}


_SPECTRUM = Option("spectrum", str, "coef:nu1=3,nu2=2", "family:key=value,... or a spectrum file")
_J = Option("J", int, 50, "spatial truncation degree")
_K = Option("K", int, 50, "temporal truncation degree")
_T = Option("T", float, 0.0, "time horizon (0 means the largest time)")
_SEED = Option("seed", int, 0, "64-bit seed")
_CONV = Option("convention", str, "mean-field", "unit-variance convention", ("mean-field", "mode-sum", "truncated", "none"))
_BASIS = Option("basis", str, "paper", "temporal basis", ("paper", "orthonormal"))
_OUT = Option("out", str, "", "output path")
_EPS = Option("epsilon", float, 8.2, "confidence parameter")

SCHEMA: dict[str, dict[str, Option]] = {
    "simulate": _opts(
        _SPECTRUM, _J, _K, _SEED, _CONV, _BASIS, _T,
        Option("nlat", int, 0, "latitude count of a lat-lon grid"),
        Option("nlon", int, 0, "longitude count of a lat-lon grid"),
        Option("grid", str, "gauss", "colatitude layout", ("gauss", "equiangular")),
        Option("points", str, "", "CSV file of colatitude,longitude pairs"),
        Option("times", _float_list, [0.0], "comma-separated times"),
        Option("out", str, "realization.csv", "CSV output path"),
        Option("binary", str, "", "optional binary output path"),
    ),
    "bound": _opts(_SPECTRUM, _J, _K, _EPS, _CONV, _OUT, Option("horizon", int, 0, "cap on every index (0 = none)")),
    "table": _opts(
        Option("spectrum", str, "coef", "coef or coef2"),
        Option("scenarios", _scenarios, [(3.0, 2.0), (2.0, 2.0), (2.0, 3.0)], "nu1:nu2[:tau],..."),
        Option("J", _int_list, [50, 100, 150], "comma-separated J values"),
        Option("K", _int_list, [50, 100, 150], "comma-separated K values"),
        _EPS,
        Option("convention", str, "mean-field", "mean-field, mode-sum or a number used as xi"),
        Option("tau", float, 1.5, "tau for coef2"),
        Option("horizon", int, 0, "cap on every index (0 = none)"),
        Option("diagnose", str, "no", "compare against the reference grids", ("yes", "no")),
        Option("out", str, "table.csv", "CSV output path"),
    ),
    "verify": _opts(
        _SPECTRUM, _SEED,
        Option("J", int, 10, "spatial truncation degree"),
        Option("K", int, 10, "temporal truncation degree"),
        Option("check", str, "all", "which check", ("covariance", "cholesky", "holder", "roundtrip", "all")),
        Option("reps", int, 2000, "replications"),
        Option("out", str, "verify", "output stem (writes .txt and .csv)"),
    ),
    "bench": _opts(
        _SPECTRUM, _J, _K, _SEED,
        Option("sizes", _int_list, [500, 1000, 2000, 4000, 8000, 16000, 32000], "ascending point counts"),
        Option("repetitions", int, 3, "timed runs per size"),
        Option("times", _float_list, [0.5], "time slices"),
        Option("out", str, "bench.csv", "CSV output path"),
    ),
    "kernel-grid": _opts(
        _SPECTRUM, _J, _K, _BASIS, _CONV,
        Option("T", float, 1.0, "time horizon"),
        Option("ntheta", int, 91, "angle samples on [0, pi]"),
        Option("nlag", int, 41, "lag samples on [-lagmax, lagmax]"),
        Option("lagmax", float, 1.0, "largest lag"),
        Option("out", str, "kernel.csv", "CSV output path"),
    ),
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict[str, Any] = field(default_factory=dict)
    threads: int = 1

    def __getitem__(self, key):
        return self.values[key]

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {"subcommand": self.subcommand, "threads": str(self.threads)}
        cp[self.subcommand] = {k: _show(v) for k, v in self.values.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, subcommand: str | None = None) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        run = cp["run"] if cp.has_section("run") else {}
        sub = subcommand or run.get("subcommand")
        if sub not in SCHEMA:
            raise ConfigError("subcommand", f"unknown subcommand {sub!r}")
        raw = dict(cp[sub]) if cp.has_section(sub) else {}
        return build_config(sub, raw, threads=run.get("threads"))


def _parse_value(opt: Option, text) -> Any:
    if not isinstance(text, str):
        return text
    try:
        value = opt.parse(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(opt.name, f"cannot parse {text!r} ({exc})") from None
    if opt.choices and value not in opt.choices:
        raise ConfigError(opt.name, f"must be one of {', '.join(opt.choices)}")
    return value


def build_config(subcommand: str, raw: dict, threads=None) -> RunConfig:
    schema = SCHEMA[subcommand]
    unknown = set(raw) - set(schema)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(name, f"not an option of {subcommand}")
    values = {}
    for name, opt in schema.items():
        values[name] = _parse_value(opt, raw[name]) if name in raw else opt.default
    if threads is None or threads == "":
        threads = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(threads)
    except ValueError:
        raise ConfigError("threads", f"cannot parse {threads!r}") from None
    if threads < 1:
        raise ConfigError("threads", "must be at least 1")
    cfg = RunConfig(subcommand, values, threads)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    for name in ("J", "K"):
        vals = v.get(name)
        if vals is None:
            continue
        if any(x < 0 for x in (vals if isinstance(vals, list) else [vals])):
            raise ConfigError(name, "must be non-negative")
    if "epsilon" in v and not v["epsilon"] > 0:
        raise ConfigError("epsilon", "must be positive")
    if cfg.subcommand == "simulate":
        if v["points"]:
            if not Path(v["points"]).is_file():
                raise ConfigError("points", f"file {v['points']!r} does not exist")
        elif v["nlat"] < 1 or v["nlon"] < 1:
            raise ConfigError("nlat", "give --nlat and --nlon, or --points")
        if not v["times"]:
            raise ConfigError("times", "need at least one time")
        if v["T"] < 0:
            raise ConfigError("T", "must be non-negative")
    if cfg.subcommand == "bench":
        sizes = v["sizes"]
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
            raise ConfigError("sizes", "must be positive and strictly ascending")
        if v["repetitions"] < 1:
            raise ConfigError("repetitions", "must be at least 1")
    if cfg.subcommand == "verify" and v["reps"] < 100:
        raise ConfigError("reps", "must be at least 100")
    if cfg.subcommand == "table" and v["spectrum"] not in bounds.FAMILY_ALIASES:
        raise ConfigError("spectrum", "must name a family (coef or coef2)")
    if "spectrum" in v and cfg.subcommand != "table":
        parse_spectrum(v["spectrum"])


# ---------------------------------------------------------------------------
# spectrum specs
# ---------------------------------------------------------------------------


def parse_spectrum(text: str) -> tuple[spectra.PowerSpectrum, str | None]:
    """``coef:nu1=3,nu2=2[,xi=..]``, ``coef2:nu1=..,nu2=..,tau=..`` or a file path."""
    if Path(text).is_file():
        try:
            return spectra.from_text(Path(text).read_text())
        except (ValueError, KeyError) as exc:
            raise ConfigError("spectrum", str(exc)) from None
    family, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("spectrum", f"malformed parameter {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigError("spectrum", f"parameter {key!r} is not a number") from None
    name = bounds.FAMILY_ALIASES.get(family.strip())
    if name is None:
        raise ConfigError("spectrum", f"unknown family {family!r} (and no such file)")
    kind = "angular"
    try:
        if name == "polyproduct":
            spec = spectra.family_polyproduct(params.get("xi", 1.0), params["nu1"], params["nu2"], kind)
        else:
            spec = spectra.family_polysum(params.get("xi", 1.0), params["nu1"], params["nu2"], params.get("tau", 1.5), kind)
    except KeyError as exc:
        raise ConfigError("spectrum", f"missing parameter {exc.args[0]}") from None
    except spectra.SpectrumError as exc:
        raise ConfigError("spectrum", str(exc)) from None
    return spec, None


def _normalized(cfg: RunConfig) -> tuple[spectra.PowerSpectrum, str]:
    spec, file_conv = parse_spectrum(cfg["spectrum"])
    conv = cfg.values.get("convention", "none")
    if conv == "none":
        return spec, file_conv or "none"
    J, K = cfg.values.get("J"), cfg.values.get("K")
    spec, _ = spectra.normalize_unit_variance(spec, conv, J, K)
    return spec, conv


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load_points(path: str) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    if data.shape[1] != 2:
        raise ConfigError("points", "file must have two columns: colatitude, longitude")
    return data


def cmd_simulate(cfg: RunConfig) -> str:
    v = cfg.values
    spec, conv = _normalized(cfg)
    times = sorted(v["times"])
    T = v["T"] or max(max(times), 1e-300)
    try:
        if v["points"]:
            grid = simulator.SphereTimeGrid.from_points(_load_points(v["points"]), times, T)
        else:
            grid = simulator.SphereTimeGrid.latlon(v["nlat"], v["nlon"], times, T, v["grid"])
    except ValueError as exc:
        raise ConfigError("times" if "time" in str(exc) else "points", str(exc)) from None
    real = simulator.simulate(spec, grid, v["J"], v["K"], v["seed"], v["basis"], cfg.threads, conv)
    real.provenance.update({f"config.{k}": _show(x) for k, x in v.items()})
    real.provenance["config.threads"] = cfg.threads
    simulator.write_csv(real, v["out"])
    simulator.write_provenance(real, v["out"] + ".provenance.txt")
    if v["binary"]:
        simulator.write_binary(real, v["binary"])
    return (
        f"simulate: {grid.n_points} points x {grid.n_times} times, J={v['J']} K={v['K']}, "
        f"{real.provenance['duration_seconds']:.3f} s -> {v['out']}"
    )


def cmd_bound(cfg: RunConfig) -> str:
    v = cfg.values
    spec, conv = _normalized(cfg)
    b = bounds.error_bound(spec, v["J"], v["K"], v["epsilon"], v["horizon"] or None)
    lines = [
        f"J = {b.J}",
        f"K = {b.K}",
        f"xi = {fmt(spec.xi)}",
        f"convention = {conv}",
        f"P = {fmt(b.P)}",
        f"Q = {fmt(b.Q)}",
        f"epsilon = {fmt(b.epsilon)}",
        f"bound_sq = {fmt(b.bound_sq)}",
        f"bound = {fmt(b.bound)}",
        f"exceedance_probability = {fmt(b.exceedance_probability)}",
        f"bracket_width = {fmt(b.bracket_width)}",
    ]
    text = "\n".join(lines) + "\n"
    if v["out"]:
        atomic_write(v["out"], text)
    sys.stdout.write(text)
    return f"bound: P + eps Q = {b.bound_sq:.6g}"


def cmd_table(cfg: RunConfig) -> str:
    v = cfg.values
    conv = v["convention"]
    if conv not in ("mean-field", "mode-sum"):
        try:
            conv = float(conv)
        except ValueError:
            raise ConfigError("convention", "must be mean-field, mode-sum or a number") from None
    cells = bounds.error_table(
        v["spectrum"], v["scenarios"], v["J"], v["K"], v["epsilon"], conv, v["tau"], v["horizon"] or None, cfg.threads
    )
    bounds.write_table(cells, v["out"])
    Js, cols, grid = bounds.pivot(cells)
    header = "J," + ",".join(f"{s}|K={k}" for s, k in cols)
    sys.stdout.write(header + "\n")
    for J, row in zip(Js, grid):
        sys.stdout.write(f"{J}," + ",".join(f"{x:.5f}" for x in row) + "\n")
    if v["diagnose"] == "yes":
        refs = bounds.REFERENCE_TABLES.get(v["spectrum"], {})
        for scn in v["scenarios"]:
            ref = refs.get(tuple(scn[:2]))
            if ref is None:
                continue
            for row in bounds.table_diagnostics(v["spectrum"], scn[0], scn[1], ref, tau=v["tau"]):
                sys.stdout.write(
                    f"diagnose {scn[0]:g}:{scn[1]:g} {row.hypothesis} {row.tails}: fitted xi {row.fitted_xi:.4f}, "
                    f"max rel err {row.max_rel_error_fit:.4f}\n"
                )
    return f"table: {len(cells)} cells -> {v['out']}"


def _verify_pairs(rng: np.random.Generator, n: int) -> list[tuple[SphereTimePoint, SphereTimePoint]]:
    pairs = []
    for _ in range(n):
        a = SphereTimePoint(float(rng.uniform(0, math.pi)), float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 1)))
        b = SphereTimePoint(
            float(min(math.pi, a.colatitude + rng.uniform(0, 0.5))), a.longitude, float(rng.uniform(0, 1))
        )
        pairs.append((a, b))
    return pairs


def cmd_verify(cfg: RunConfig) -> str:
    v = cfg.values
    spec, _ = parse_spectrum(v["spectrum"])
    spec, _ = spectra.normalize_unit_variance(spec)
    checks = ["covariance", "cholesky", "holder", "roundtrip"] if v["check"] == "all" else [v["check"]]
    results = []
    for name in checks:
        if name == "covariance":
            pairs = _verify_pairs(np.random.default_rng(v["seed"]), 12)
            rep = verify.empirical_covariance(spec, pairs, v["reps"], v["J"], v["K"], v["seed"], min_pass=11, threads=cfg.threads)
        elif name == "cholesky":
            grid = simulator.SphereTimeGrid.fibonacci(10, [0.0, 0.4], 1.0)
            rep = verify.cholesky_oracle_check(spec, grid, v["J"], v["K"], v["reps"], v["seed"])
        elif name == "holder":
            rep = verify.holder_moment_check(spec, 1, 1.0, n_reps=v["reps"], J=v["J"], K=max(v["K"], 50), seed=v["seed"])
        else:
            rep = verify.schoenberg_roundtrip(spec, min(v["J"], 5))
        rep.write(f"{v['out']}-{name}")
        sys.stdout.write(f"{name}: {'pass' if rep.passed else 'FAIL'} ({rep.rule})\n")
        results.append(rep.passed)
    if not all(results):
        raise RuntimeError("verification failed")
    return f"verify: {len(results)} checks passed"


@dataclass(frozen=True)
class BenchRow:
    n_points: int
    seconds: float
    ratio: float | None


def bench(
    sizes: Sequence[int],
    J: int,
    K: int,
    repetitions: int = 3,
    spectrum: spectra.PowerSpectrum | None = None,
    times: Sequence[float] = (0.5,),
    seed: int = 0,
    threads: int = 1,
    timer: Callable[[], float] = time.perf_counter,
) -> list[BenchRow]:
    """Median wall time of a full simulate call per grid size, with doubling ratios."""
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be ascending")
    if spectrum is None:
        spectrum, _ = spectra.normalize_unit_variance(spectra.family_polyproduct(1.0, 3.0, 2.0))
    T = max(max(times), 1.0)
    rows = []
    for n in sizes:
        grid = simulator.SphereTimeGrid.fibonacci(n, times, T)
        runs = []
        for _ in range(repetitions):
            t0 = timer()
            simulator.simulate(spectrum, grid, J, K, seed, threads=threads)
            runs.append(timer() - t0)
        sec = statistics.median(runs)
        ratio = sec / rows[-1].seconds if rows else None
        rows.append(BenchRow(n, sec, ratio))
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    lines = ["n_points,seconds,ratio"]
    lines += [f"{r.n_points},{fmt(r.seconds)},{'' if r.ratio is None else fmt(r.ratio)}" for r in rows]
    return "\n".join(lines) + "\n"


def cmd_bench(cfg: RunConfig) -> str:
    v = cfg.values
    spec, _ = parse_spectrum(v["spectrum"])
    spec, _ = spectra.normalize_unit_variance(spec)
    rows = bench(v["sizes"], v["J"], v["K"], v["repetitions"], spec, v["times"], v["seed"], cfg.threads)
    text = bench_csv(rows)
    atomic_write(v["out"], text)
    sys.stdout.write(text)
    return f"bench: {len(rows)} sizes -> {v['out']}"


def cmd_kernel_grid(cfg: RunConfig) -> str:
    v = cfg.values
    spec, _ = _normalized(cfg)
    model = kernel.KernelModel.from_spectrum(spec, v["J"], v["K"], v["basis"], v["T"])
    rows = kernel.kernel_grid(model, np.linspace(0.0, math.pi, v["ntheta"]), np.linspace(-v["lagmax"], v["lagmax"], v["nlag"]))
    kernel.write_kernel_grid(v["out"], rows)
    return f"kernel-grid: {len(rows)} rows -> {v['out']}"


COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "table": cmd_table,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "kernel-grid": cmd_kernel_grid,
}


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        summary = COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{summary} [{time.perf_counter() - t0:.3f} s]")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spherekl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMA.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with a section named after the subcommand")
        p.add_argument("--threads", help=f"worker threads (default ${THREADS_ENV} or 1)")
        for opt in schema.values():
            extra = {"choices": opt.choices} if opt.choices else {}
            p.add_argument(f"--{opt.name}", default=argparse.SUPPRESS, help=f"{opt.help} (default {_show(opt.default)})", **extra)
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    sub = ns.pop("subcommand")
    cfg_path = ns.pop("config", None)
    threads = ns.pop("threads", None)
    raw: dict[str, str] = {}
    if cfg_path:
        if not Path(cfg_path).is_file():
            raise ConfigError("config", f"file {cfg_path!r} does not exist")
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read(cfg_path)
        if cp.has_section(sub):
            raw.update(cp[sub])
        if threads is None and cp.has_section("run"):
            threads = cp["run"].get("threads")
    raw.update({k: v for k, v in ns.items()})
    return build_config(sub, raw, threads)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
