"""Command-line front end.

Subcommands: encode, decode, mse, optimize, mdr, budget. Settings come
from built-in defaults, then an optional ``--config`` JSON file, then
command-line flags (highest priority). Progress goes to stderr; data goes
to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields

from . import __version__
from .budget import PowerBudgetParams, compute_budget, min_tx_power_dbm, path_loss_db
from .errors import ValidationError
from .fpmm import FpmmConfig, run_mdr_experiment
from .mapping import MappingConfig, build_mapping, decode_batch, encode_batch
from .mse import NoiseModel, closed_form_mse, monte_carlo_mse, optimize_levels
from .seeding import derive_seed
from .tables import FORMATS, ResultTable, write_table

log = logging.getLogger("ajscc")

WORKERS_ENV = "AJSCC_WORKERS"
KINDS = ("encode", "decode", "mse", "optimize", "mdr", "budget")


@dataclass
class ExperimentSpec:
    kind: str
    n: list = field(default_factory=lambda: [2])
    d_max: list = field(default_factory=lambda: [1500.0])
    snr_db: list = field(default_factory=lambda: [30.0])
    ranges: list | None = None
    levels: list | None = None
    l_min: int = 2
    l_max: int = 200
    l_hi: int = 500
    bandwidth_hz: list = field(default_factory=lambda: [50e3])
    n_node: list = field(default_factory=lambda: [1000])
    n_q: int = 100
    n_0: int = 2
    t_win_s: float = 10.0
    f_s_hz: float | None = None
    fading: bool = False
    trials: int | None = None
    seed: int = 0
    values: list = field(default_factory=list)
    coverage_m: list = field(default_factory=lambda: [100.0, 1000.0])
    rf_gain_db: float = 0.0
    budget: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"

    def validate(self):
        if self.kind not in KINDS:
            raise ValidationError("kind", f"must be one of {', '.join(KINDS)}")
        grids = {"mse": ("n", "d_max", "snr_db"), "optimize": ("n", "d_max", "snr_db"),
                 "mdr": ("bandwidth_hz", "n_node", "snr_db"), "budget": ("coverage_m",)}
        for name in grids.get(self.kind, ()):
            if not getattr(self, name):
                raise ValidationError(name, "grid must be nonempty")
        if self.trials is not None and self.trials < 1:
            raise ValidationError("trials", f"must be >= 1, got {self.trials}")
        if self.format not in FORMATS:
            raise ValidationError("format", f"must be one of {', '.join(FORMATS)}")
        if self.kind in ("encode", "decode"):
            if not self.values:
                raise ValidationError("values", "nothing to " + self.kind)
            if self.levels is None:
                raise ValidationError("levels", "required for " + self.kind)
        if self.kind == "mse" and self.l_min < 2:
            raise ValidationError("l_min", f"must be >= 2, got {self.l_min}")
        if self.kind == "mse" and self.l_max < self.l_min:
            raise ValidationError("l_max", f"must be >= l_min={self.l_min}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed", "must be an unsigned 64-bit integer")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("format")
        return d


def _unit_ranges(spec: ExperimentSpec, n: int) -> tuple[float, ...]:
    if spec.ranges is None:
        return (1.0,) * n
    if len(spec.ranges) != n:
        raise ValidationError("ranges", f"expected {n} values, got {len(spec.ranges)}")
    return tuple(float(r) for r in spec.ranges)


def _mapping(spec: ExperimentSpec):
    n = len(spec.levels) + 1
    return build_mapping(MappingConfig(_unit_ranges(spec, n), tuple(spec.levels), spec.d_max[0]))


# --- commands ---------------------------------------------------------------


def cmd_encode(spec: ExperimentSpec) -> ResultTable:
    mapping = _mapping(spec)
    n = mapping.dimensions
    if len(spec.values) % n:
        raise ValidationError("values", f"expected a multiple of {n} source components, got {len(spec.values)}")
    sources = [spec.values[i : i + n] for i in range(0, len(spec.values), n)]
    encoded = encode_batch(mapping, sources)
    table = ResultTable([f"s{k + 1}" for k in range(n)] + ["encoded"])
    for s, x in zip(sources, encoded):
        table.add_row(*[float(v) for v in s], float(x))
    return table


def cmd_decode(spec: ExperimentSpec) -> ResultTable:
    mapping = _mapping(spec)
    n = mapping.dimensions
    values, digits = decode_batch(mapping, spec.values)
    table = ResultTable(["received"] + [f"s{k + 1}" for k in range(n)] + [f"i{k + 1}" for k in range(n - 1)])
    for r, v, i in zip(spec.values, values, digits):
        table.add_row(float(r), *[float(x) for x in v], *[int(x) for x in i])
    return table


def cmd_mse_sweep(spec: ExperimentSpec) -> ResultTable:
    """Closed-form (optionally Monte Carlo) MSE against stage counts.

    N=3 gives the full (L1, L2) grid; other N use equal stage counts.
    """
    table = ResultTable(["n", "d_max", "snr_db", "l1", "l2", "noise_term", "quantization_term", "mse"]
                        + (["mse_mc"] if spec.trials else []))
    l_grid = range(spec.l_min, spec.l_max + 1)
    for n in spec.n:
        ranges = _unit_ranges(spec, n)
        for d_max in spec.d_max:
            for snr in spec.snr_db:
                noise = NoiseModel(float(snr))
                log.info("mse n=%s d_max=%s snr=%s", n, d_max, snr)
                if n == 3:
                    tuples = [(a, b) for a in l_grid for b in l_grid]
                else:
                    tuples = [(lv,) * (n - 1) for lv in l_grid]
                for lv in tuples:
                    cfg = MappingConfig(ranges, lv, d_max)
                    br = closed_form_mse(cfg, noise)
                    row = [n, float(d_max), float(snr), lv[0], lv[1] if n > 2 else 0,
                           br.noise_term, math.fsum(br.quantization_terms), br.total]
                    if spec.trials:
                        seed = derive_seed(spec.seed, "mse", n, float(d_max), float(snr), list(lv))
                        row.append(monte_carlo_mse(build_mapping(cfg), noise, spec.trials, seed))
                    table.add_row(*row)
    return table


def cmd_optimize_sweep(spec: ExperimentSpec) -> ResultTable:
    """Optimal stage counts per (N, D_max, SNR). Unused level columns are 0."""
    width = max(spec.n) - 1
    table = ResultTable(["n", "d_max", "snr_db", "optimal_mse", "l_mean"] + [f"l{k + 1}" for k in range(width)])
    for n in spec.n:
        for d_max in spec.d_max:
            for snr in spec.snr_db:
                log.info("optimize n=%s d_max=%s snr=%s", n, d_max, snr)
                res = optimize_levels(n, _unit_ranges(spec, n), d_max, NoiseModel(float(snr)), spec.l_hi)
                lv = list(res.optimal_levels) + [0] * (width - len(res.optimal_levels))
                table.add_row(n, float(d_max), float(snr), res.optimal_mse,
                              sum(res.optimal_levels) / len(res.optimal_levels), *lv)
    return table


def cmd_mdr_sweep(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    trials = spec.trials or 10
    table = ResultTable(["bandwidth_hz", "n_node", "fading", "snr_db", "windows", "n_missed", "mdr"])
    for bw in spec.bandwidth_hz:
        for n_node in spec.n_node:
            cfg = FpmmConfig(float(bw), spec.n_q, spec.n_0, int(n_node), spec.t_win_s, spec.f_s_hz)
            cell_seed = derive_seed(spec.seed, "mdr", float(bw), int(n_node), bool(spec.fading))
            log.info("mdr B_w=%s n_node=%s fading=%s (%d samples x %d windows x %d SNRs)",
                     bw, n_node, spec.fading, cfg.n_samples, trials, len(spec.snr_db))
            reports = run_mdr_experiment(cfg, spec.snr_db, trials, cell_seed, spec.fading, workers)
            for r in reports:
                table.add_row(float(bw), int(n_node), int(spec.fading), r.snr_db, r.windows, r.n_missed, r.mdr)
    return table


def cmd_budget(spec: ExperimentSpec) -> ResultTable:
    params = PowerBudgetParams(rf_gain_db=spec.rf_gain_db, **spec.budget)
    rep = compute_budget(params)
    table = ResultTable(["quantity", "value"])
    for name, value in asdict(rep).items():
        table.add_row(name, value)
    for cov in spec.coverage_m:
        table.add_row(f"path_loss_db@{cov:g}m", path_loss_db(cov, params.path_loss_exponent))
        table.add_row(f"min_tx_dbm@{cov:g}m", min_tx_power_dbm(cov, params))
    return table


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "mse": cmd_mse_sweep,
    "optimize": cmd_optimize_sweep,
    "mdr": cmd_mdr_sweep,
    "budget": cmd_budget,
}


# --- argument handling ---------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with experiment settings")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ajscc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)

    for kind in ("encode", "decode"):
        p = sub.add_parser(kind, help=f"{kind} with an N:1 mapping")
        _add_common(p)
        p.add_argument("values", nargs="*", type=float,
                       help="source components (encode) or received scalars (decode)")
        p.add_argument("--input", help="read whitespace/comma separated values from a file")
        p.add_argument("--levels", type=_ints, help="stage counts L1,...,L(N-1)")
        p.add_argument("--ranges", type=_floats, help="source ranges R1,...,RN (default all 1)")
        p.add_argument("--d-max", dest="d_max", type=_floats)

    for kind, help_ in (("mse", "MSE against stage counts"), ("optimize", "optimal stage counts")):
        p = sub.add_parser(kind, help=help_)
        _add_common(p)
        p.add_argument("--n", type=_ints, help="dimension grid")
        p.add_argument("--d-max", dest="d_max", type=_floats)
        p.add_argument("--snr", dest="snr_db", type=_floats)
        p.add_argument("--ranges", type=_floats)
        if kind == "mse":
            p.add_argument("--l-min", dest="l_min", type=int)
            p.add_argument("--l-max", dest="l_max", type=int)
        else:
            p.add_argument("--l-hi", dest="l_hi", type=int)

    p = sub.add_parser("mdr", help="FPMM miss-detection rate against SNR")
    _add_common(p)
    p.add_argument("--bandwidth", dest="bandwidth_hz", type=_floats, help="double-side bandwidths in Hz")
    p.add_argument("--n-node", dest="n_node", type=_ints)
    p.add_argument("--snr", dest="snr_db", type=_floats)
    p.add_argument("--n-q", dest="n_q", type=int)
    p.add_argument("--n-0", dest="n_0", type=int)
    p.add_argument("--t-win", dest="t_win_s", type=float)
    p.add_argument("--fs", dest="f_s_hz", type=float)
    p.add_argument("--fading", action="store_const", const=True, default=None)

    p = sub.add_parser("budget", help="receiver power budget")
    _add_common(p)
    p.add_argument("--gain", dest="rf_gain_db", type=float, help="RF gain G in dB")
    p.add_argument("--coverage", dest="coverage_m", type=_floats, help="coverage distances in m")
    for flag, name, typ in _BUDGET_FLAGS:
        p.add_argument(flag, dest=name, type=typ)
    return parser


_BUDGET_FLAGS = (
    ("--thermal-floor", "thermal_noise_floor_dbm", float),
    ("--noise-figure", "noise_figure_db", float),
    ("--min-snr", "min_operational_snr_db", float),
    ("--impl-loss", "implementation_loss_db", float),
    ("--adc-bits", "adc_bits", int),
    ("--adc-floor-below-noise", "adc_floor_below_noise_db", float),
    ("--margin", "peak_to_average_margin_db", float),
    ("--exponent", "path_loss_exponent", float),
)


_CLI_ONLY = {"config", "verbose", "input"}


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    settings: dict = {}
    if args.config:
        with open(args.config) as f:
            settings.update(json.load(f))
        if settings.get("kind", args.kind) != args.kind:
            raise ValidationError("kind", f"config is for {settings['kind']!r}, command is {args.kind!r}")
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(settings) - known
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown setting in config file")
    budget_keys = {name for _, name, _ in _BUDGET_FLAGS}
    for key, value in vars(args).items():
        if key in budget_keys:
            if value is not None:
                settings.setdefault("budget", {})[key] = value
            continue
        if key in _CLI_ONLY or value is None or (key == "values" and not value):
            continue
        settings[key] = value
    if getattr(args, "input", None):
        with open(args.input) as f:
            settings["values"] = _floats(f.read())
    settings["kind"] = args.kind
    for key in ("n", "d_max", "snr_db", "bandwidth_hz", "n_node", "coverage_m"):
        if key in settings and not isinstance(settings[key], list):
            settings[key] = [settings[key]]
    spec = ExperimentSpec(**settings)
    spec.validate()
    return spec


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        spec = resolve_spec(args)
        t0 = time.perf_counter()
        if spec.kind == "mdr":
            table = cmd_mdr_sweep(spec, workers_from_env())
        else:
            table = COMMANDS[spec.kind](spec)
        table.metadata = {
            "kind": spec.kind,
            "spec": spec.echo(),
            "seed": spec.seed,
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - t0, 3),
        }
        if spec.out:
            write_table(table, spec.out, spec.format)
        else:
            sys.stdout.write(table.render(spec.format))
    except (OSError, json.JSONDecodeError) as e:
        print(f"ajscc {args.kind}: error: {e}", file=sys.stderr)
        return 1
    except (ValueError, TypeError) as e:
        print(f"ajscc {args.kind}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
