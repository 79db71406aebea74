"""Monte Carlo benchmark harness: MSE vs SNR per estimator, grouping and constraint.

Experiments are driven by a flat key = value config file and are fully
deterministic given (config, seed): every random draw is keyed by
(seed, snr index, trial index).  Results go to a plot-ready CSV with one row
per (estimator, snr) cell, including the averaged constrained CRB trace.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import crb as crb_mod
from .airlink import (
    NoncoherentSchedule,
    default_pilots,
    noise_variance_from_snr,
    simulate_exchange,
    simulate_noncoherent,
)
from .estimators import (
    ConstraintSpec,
    aml_estimate,
    argos_estimate,
    avalanche_estimate,
    daisy_chain_estimate,
    ls_estimate,
    mse,
    normalize_for_constraint,
    rogalin_estimate,
)
from .grouping import GroupScheme, custom_scheme, make_scheme
from .model import (
    ChannelRealization,
    GEOMETRIC,
    GeometryConfig,
    IID_RAYLEIGH,
    ImpairmentConfig,
    gen_channel,
    gen_impairments,
)
from .stacking import build_stacked, build_stacked_noncoherent, check_identifiability

KNOWN_ESTIMATORS = ("ls", "argos", "rogalin", "daisy", "avalanche", "aml")


class UnidentifiableError(ValueError):
    """Raised when the configured scheme cannot determine all coefficients."""


@dataclass
class ExperimentConfig:
    m: int
    scheme: str = "SINGLETON"
    g: int | None = None
    group_sizes: tuple | None = None       # for CUSTOM schemes
    pilot_lengths: tuple | None = None
    channel: str = "iid"                   # iid | geometric
    rows: int | None = None
    cols: int | None = None
    spacing: float = 0.5
    delta: float = 0.1
    snr_db: tuple = (10.0, 20.0, 30.0)
    trials: int = 50
    estimators: tuple = ("ls",)
    constraint: str = "NPC"
    seed: int = 0
    pilots: str = "UNIT_PHASE_RANDOM"
    crb: bool = True
    crb_trials: int = 50
    crb_known_h: bool = False
    aml_tol: float = 1e-6
    aml_max_iter: int = 100
    aml_init: str = "ls"                   # ls | ones
    noncoherent_slots: tuple | None = None  # tuple of group tuples
    timing: bool = False

    def geometry(self) -> GeometryConfig | None:
        if self.channel != "geometric":
            return None
        if self.rows is None or self.cols is None:
            raise ValueError("geometric channel needs rows and cols")
        return GeometryConfig(self.rows, self.cols, self.spacing)

    def resolve_scheme(self) -> GroupScheme:
        if self.scheme == "CUSTOM":
            if self.group_sizes is None:
                raise ValueError("CUSTOM scheme requires group_sizes")
            return custom_scheme(self.group_sizes, self.pilot_lengths)
        return make_scheme(self.scheme, self.m, self.g, self.geometry())


@dataclass
class ResultRow:
    estimator: str
    constraint: str
    snr_db: float
    mse: float
    crb_trace: float
    trials: int
    wall_time: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)   # (estimator, snr_db) -> count


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key = value format (',' lists, ';'-separated slot lists)."""
    kv = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()

    def take(key, conv, default):
        if key not in kv:
            return default
        try:
            return conv(kv.pop(key))
        except (TypeError, ValueError) as e:
            raise ValueError(f"config key {key!r}: {e}") from e

    int_tuple = lambda s: tuple(int(x) for x in s.split(","))
    float_tuple = lambda s: tuple(float(x) for x in s.split(","))
    str_tuple = lambda s: tuple(x.strip() for x in s.split(","))
    boolean = lambda s: _BOOL[s.lower()]
    slots = lambda s: tuple(tuple(int(x) for x in grp.split()) for grp in s.split(";"))

    if "m" not in kv:
        raise ValueError("config must set m")
    cfg = ExperimentConfig(
        m=take("m", int, None),
        scheme=take("scheme", str, "SINGLETON"),
        g=take("g", int, None),
        group_sizes=take("group_sizes", int_tuple, None),
        pilot_lengths=take("pilot_lengths", int_tuple, None),
        channel=take("channel", str, "iid"),
        rows=take("rows", int, None),
        cols=take("cols", int, None),
        spacing=take("spacing", float, 0.5),
        delta=take("delta", float, 0.1),
        snr_db=take("snr_db", float_tuple, (10.0, 20.0, 30.0)),
        trials=take("trials", int, 50),
        estimators=take("estimators", str_tuple, ("ls",)),
        constraint=take("constraint", str, "NPC"),
        seed=take("seed", int, 0),
        pilots=take("pilots", str, "UNIT_PHASE_RANDOM"),
        crb=take("crb", boolean, True),
        crb_trials=take("crb_trials", int, 50),
        crb_known_h=take("crb_known_h", boolean, False),
        aml_tol=take("aml_tol", float, 1e-6),
        aml_max_iter=take("aml_max_iter", int, 100),
        aml_init=take("aml_init", str, "ls"),
        noncoherent_slots=take("noncoherent_slots", slots, None),
        timing=take("timing", boolean, False),
    )
    if kv:
        raise ValueError(f"unknown config keys: {sorted(kv)}")
    if cfg.trials < 1 or not cfg.snr_db:
        raise ValueError("need trials >= 1 and a non-empty snr grid")
    if cfg.channel not in ("iid", "geometric"):
        raise ValueError("channel must be iid or geometric")
    for e in cfg.estimators:
        if e not in KNOWN_ESTIMATORS:
            raise ValueError(f"unknown estimator {e!r}")
    return cfg


def _constraint_spec(kind: str, f_true: np.ndarray) -> ConstraintSpec:
    if kind == "FCC":
        return ConstraintSpec.fcc()
    if kind == "NPC":
        return ConstraintSpec.npc(f_true)
    if kind == "UNIT_NORM":
        return ConstraintSpec.unit_norm()
    raise ValueError(f"unsupported experiment constraint {kind!r}")


def _estimate_one(est: str, cfg: ExperimentConfig, spec: ConstraintSpec,
                  ms_or_slots, pilots, partition, schedule) -> np.ndarray:
    if est == "ls":
        if schedule is not None:
            sys_ = build_stacked_noncoherent(ms_or_slots, pilots, partition, schedule)
        else:
            sys_ = build_stacked(ms_or_slots, pilots, partition)
        return ls_estimate(sys_, spec).f_hat.f
    if schedule is not None:
        raise ValueError(f"estimator {est!r} does not support non-coherent schedules")
    ms = ms_or_slots
    if est == "argos":
        f = argos_estimate(ms, partition).f
    elif est == "daisy":
        f = daisy_chain_estimate(ms, partition).f
    elif est == "avalanche":
        f = avalanche_estimate(ms, pilots, partition).f
    elif est == "rogalin":
        return rogalin_estimate(ms, partition, spec).f_hat.f
    elif est == "aml":
        init = None
        if cfg.aml_init == "ls":
            init = ls_estimate(build_stacked(ms, pilots, partition),
                               ConstraintSpec.fcc()).f_hat.f
        return aml_estimate(ms, pilots, partition, init=init, tol=cfg.aml_tol,
                            max_iter=cfg.aml_max_iter, constraint=spec).f_hat.f
    else:
        raise ValueError(f"unknown estimator {est!r}")
    # ratio-type estimators are FCC-native; rescale for other constraints
    if spec.kind != "FCC":
        f = normalize_for_constraint(f, spec)
    return f


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Per (snr, trial): fresh impairments, channel, pilots and noise; all
    configured estimators see the same measurements.  The CRB is averaged over
    the first crb_trials realizations of the same stream.
    """
    scheme = config.resolve_scheme()
    partition = scheme.partition
    schedule = None
    if config.noncoherent_slots is not None:
        schedule = NoncoherentSchedule(config.noncoherent_slots)
    ident = check_identifiability(partition, schedule)
    if not ident["ok"]:
        raise UnidentifiableError(
            f"scheme not identifiable: rows={ident['rows']} < needed={ident['needed']}")
    geometry = config.geometry()
    model = GEOMETRIC if config.channel == "geometric" else IID_RAYLEIGH
    perm = scheme.permutation
    imp_cfg = ImpairmentConfig(config.delta, fix_first_to_one=True)

    table = ResultTable()
    crb_kind = "FCC" if config.constraint == "FCC" else "NPC"
    for si, snr in enumerate(config.snr_db):
        sq_err = {e: [] for e in config.estimators}
        wall = dict.fromkeys(config.estimators, 0.0)
        crb_traces = []
        for trial in range(config.trials):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, si, trial]))
            imp = gen_impairments(imp_cfg, config.m, rng)
            chan = gen_channel(config.m, model, rng, geometry)
            if not np.array_equal(perm, np.arange(config.m)):
                chan = ChannelRealization(chan.c[np.ix_(perm, perm)], chan.model_tag,
                                          chan.ref_gain)
            pilots = default_pilots(partition, config.pilots, rng)
            if schedule is not None:
                data = simulate_noncoherent(partition, schedule, pilots, imp, snr,
                                            rng, model, geometry)
            else:
                data = simulate_exchange(partition, pilots, imp, chan, snr, rng)
            f_true = imp.tx_gains / imp.rx_gains
            spec = _constraint_spec(config.constraint, f_true)
            for est in config.estimators:
                t0 = time.perf_counter()
                try:
                    f_hat = _estimate_one(est, config, spec, data, pilots,
                                          partition, schedule)
                except (np.linalg.LinAlgError, ZeroDivisionError, ArithmeticError):
                    key = (est, snr)
                    table.skipped[key] = table.skipped.get(key, 0) + 1
                else:
                    sq_err[est].append(mse(f_hat, f_true))
                if config.timing:
                    wall[est] += time.perf_counter() - t0
            if config.crb and schedule is None and trial < config.crb_trials:
                sigma2 = noise_variance_from_snr(snr, chan)
                if sigma2 > 0:
                    ctx = crb_mod.context_from_model(imp, chan, pilots, partition, sigma2)
                    bound = (crb_mod.crb_f_known_h(ctx, crb_kind) if config.crb_known_h
                             else crb_mod.crb_f(ctx, crb_kind))
                    crb_traces.append(bound.trace)
        crb_mean = float(np.mean(crb_traces)) if crb_traces else float("nan")
        for est in config.estimators:
            errs = sq_err[est]
            table.rows.append(ResultRow(
                estimator=est, constraint=config.constraint, snr_db=float(snr),
                mse=float(np.mean(errs)) if errs else float("nan"),
                crb_trace=crb_mean, trials=len(errs), wall_time=wall[est]))
    return table


def emit_csv(table: ResultTable, path) -> None:
    """Stable column order; floats printed with 12+ significant digits."""
    if not table.rows:
        raise ValueError("empty result table")
    with open(path, "w") as fh:
        fh.write("estimator,constraint,snr_db,mse,crb_trace,trials,wall_time\n")
        for r in table.rows:
            fh.write(f"{r.estimator},{r.constraint},{r.snr_db:.12g},{r.mse:.12e},"
                     f"{r.crb_trace:.12e},{r.trials},{r.wall_time:.12e}\n")


def _load_config(path, seed_override=None) -> ExperimentConfig:
    with open(path) as fh:
        cfg = parse_config(fh.read())
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    return cfg


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="arraycal",
                                     description="Reciprocity calibration benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the Monte Carlo sweep of a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_crb = sub.add_parser("crb", help="CRB-only sweep of a config")
    p_crb.add_argument("config")
    p_crb.add_argument("--out", default=None)
    p_crb.add_argument("--seed", type=int, default=None)
    p_check = sub.add_parser("check", help="identifiability report for a config")
    p_check.add_argument("config")
    p_schemes = sub.add_parser("schemes", help="list known grouping schemes")
    p_schemes.add_argument("--list", action="store_true")
    args = parser.parse_args(argv)

    if args.command == "schemes":
        for name in ("FC_I", "FC_II", "SINGLETON", "ARGOS", "AVALANCHE",
                     "INTERLEAVED", "NON_INTERLEAVED", "CUSTOM"):
            print(name)
        return 0
    try:
        cfg = _load_config(args.config, getattr(args, "seed", None))
    except (OSError, ValueError, KeyError) as e:
        print(f"error: cannot parse config: {e}", file=sys.stderr)
        return 2

    if args.command == "check":
        try:
            scheme = cfg.resolve_scheme()
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        schedule = (NoncoherentSchedule(cfg.noncoherent_slots)
                    if cfg.noncoherent_slots else None)
        ident = check_identifiability(scheme.partition, schedule)
        state = "ok" if ident["ok"] else "not ok"
        print(f"rows={ident['rows']} needed={ident['needed']} {state}")
        return 0 if ident["ok"] else 3

    try:
        if args.command == "crb":
            cfg = replace(cfg, estimators=("ls",), trials=cfg.crb_trials, crb=True)
        table = run_experiment(cfg)
    except UnidentifiableError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    for (est, snr), n in sorted(table.skipped.items()):
        print(f"warning: {n} skipped trials for {est} at {snr} dB", file=sys.stderr)
    if args.command == "crb" and args.out is None:
        for r in table.rows:
            print(f"snr_db={r.snr_db:g} crb_trace={r.crb_trace:.12e}")
    else:
        emit_csv(table, args.out)
    return 0


def cli_entry() -> None:
    raise SystemExit(cli_main())
