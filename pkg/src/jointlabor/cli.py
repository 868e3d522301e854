"""Command-line front end.

    jointlabor simulate        baseline tables
    jointlabor calibrate       SMM estimation (params.config, trace.csv)
    jointlabor counterfactual  baseline / flexible / outsourcing tables
    jointlabor sweep           gaps over a grid of norm penalties
    jointlabor regional        prefecture prediction curve

All numbers are written with six significant digits and no timestamps, so
equal inputs give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import calibration as cal
from . import counterfactual as cf
from . import regional as reg
from .config import ConfigError, RunConfig, bundled_prefecture_path, load_config, parse_grid
from .model import ESTIMATED, HOURS_PER_UNIT
from .population import PopulationConfig, draw_couples, solve_draws
from .solver import Mode
from .statistics import (
    GapSet, MomentSet, PAIR_LABELS, compute_moments, fmt, gender_gaps, hours_table,
    occupation_matrix, relative_earnings_density,
)

log = logging.getLogger("jointlabor")

HOURS_COLS = ("h_m", "h_f", "d_m", "d_f", "d_buy")


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage} failed: {exc}")
        self.stage = stage


def _writer(out, name, header):
    fh = open(os.path.join(out, name), "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def write_moments(out, m):
    fh, w = _writer(out, "moments.csv", ("moment", "value"))
    with fh:
        for k, v in m.as_dict().items():
            w.writerow((k, fmt(v)))


def write_occupation(out, panels: dict, name="occupation.csv"):
    fh, w = _writer(out, name, ("scenario", "husband", "wife_R", "wife_NR", "wife_NW"))
    with fh:
        for sc, M in panels.items():
            for i, lab in enumerate(PAIR_LABELS):
                w.writerow((sc, lab, *(fmt(x) for x in M[i])))


def write_hours(out, panels: dict, name="hours.csv"):
    fh, w = _writer(out, name, ("scenario", "husband", "wife") + HOURS_COLS)
    with fh:
        for sc, table in panels.items():
            for (jm, jf), row in table.items():
                w.writerow((sc, jm, jf, *(fmt(row[c]) for c in HOURS_COLS)))


def write_gaps(out, panels: dict, name="gaps.csv"):
    fh, w = _writer(out, name, ("gap",) + tuple(panels))
    with fh:
        for g in GapSet.names():
            w.writerow((g, *(fmt(getattr(panels[sc], g)) for sc in panels)))


def write_histogram(out, hist):
    fh, w = _writer(out, "relative_earnings.csv", ("bin_lo", "bin_hi", "mass"))
    with fh:
        for lo, hi, m in zip(hist.edges[:-1], hist.edges[1:], hist.mass):
            w.writerow((fmt(lo), fmt(hi), fmt(m)))
        w.writerow(("0.5", "0.5", fmt(hist.atom_half)))


def write_params(out, params, name="params.config"):
    with open(os.path.join(out, name), "w") as fh:
        fh.write("[params]\n")
        for k, v in params.as_dict().items():
            fh.write(f"{k} = {v!r}\n")


# ---------------------------------------------------------------------------
# commands


def _pop_config(cfg: RunConfig, mode=None):
    return PopulationConfig(cfg.n, cfg.seed, mode or Mode())


def _scenario(cfg: RunConfig, name):
    price = cfg.outsourcing_price if name == "outsourcing" else None
    return cf.Scenario(name, price)


def cmd_simulate(cfg: RunConfig):
    pop = solve_draws(draw_couples(cfg.params, _pop_config(cfg)), cfg.params, Mode())
    write_moments(cfg.out, compute_moments(pop, cfg.params))
    write_occupation(cfg.out, {"baseline": occupation_matrix(pop)})
    write_hours(cfg.out, {"baseline": hours_table(pop, HOURS_PER_UNIT)})
    write_gaps(cfg.out, {"baseline": gender_gaps(pop)})
    write_histogram(cfg.out, relative_earnings_density(pop))


def cmd_calibrate(cfg: RunConfig):
    c = dict(cfg.calibration)
    targets = cfg.targets
    if "targets_file" in c:
        try:
            targets = cal.CalibrationTargets.from_file(c.pop("targets_file"))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    init = cfg.params.replace(**c.pop("init", {})) if "init" in c else cfg.params
    conf = cal.CalibrationConfig(
        n_couples=int(c.get("n", cfg.n)), seed=int(c.get("seed", cfg.seed)),
        starts=int(c.get("starts", 8)), max_evals=int(c.get("max_evals", 5000)),
        jitter=float(c.get("jitter", 0.15)), free=tuple(c.get("free", ESTIMATED)),
        moments=tuple(c.get("moments", MomentSet.names())))
    res = cal.calibrate(targets, init, conf)
    write_params(cfg.out, res.params_hat)
    fh, w = _writer(cfg.out, "trace.csv", ("start", "evaluation") + ESTIMATED + ("objective",))
    with fh:
        for row in res.trace:
            w.writerow((row[0], row[1], *(fmt(x) for x in row[2:])))
    fh, w = _writer(cfg.out, "calibration.csv", ("objective", "converged"))
    with fh:
        w.writerow((fmt(res.objective), int(res.converged)))


def cmd_counterfactual(cfg: RunConfig):
    couples = draw_couples(cfg.params, _pop_config(cfg))
    occ, gaps, hours = {}, {}, {}
    for name in cfg.scenarios:
        r = cf.run_scenario(cfg.params, _scenario(cfg, name), _pop_config(cfg), couples)
        occ[name], gaps[name], hours[name] = r.occupation, r.gaps, r.hours
    write_occupation(cfg.out, occ)
    write_gaps(cfg.out, gaps)
    write_hours(cfg.out, hours)


def cmd_sweep(cfg: RunConfig):
    grid = cfg.sweep_grid if cfg.sweep_grid is not None else cf.default_delta_grid(cfg.params)
    rows = cf.delta_sweep(cfg.params, [_scenario(cfg, n) for n in cfg.scenarios], grid,
                          _pop_config(cfg))
    fh, w = _writer(cfg.out, "sweep.csv", ("scenario", "delta", "gap", "value"))
    with fh:
        for sc, d, g, v in rows:
            w.writerow((sc, fmt(d), g, fmt(v)))
    with open(os.path.join(cfg.out, "sweep.gp"), "w") as fh:
        fh.write(GNUPLOT_SWEEP)


GNUPLOT_SWEEP = """\
# gnuplot -e "gap='participation'" sweep.gp
set datafile separator ','
set xlabel 'delta'
set ylabel gap . ' gap'
plot for [s in 'baseline flexible_regular outsourcing'] \\
    '< grep ,'.gap.', sweep.csv | grep ^'.s using 2:4 with linespoints title s
"""


def cmd_regional(cfg: RunConfig):
    path = cfg.prefecture_data or bundled_prefecture_path()
    if not os.path.isfile(path):
        raise ConfigError(f"prefecture data not found: {path}")
    records = reg.load_prefectures(path)
    bridge = reg.ols_bridge(records)
    national = reg.NATIONAL_DATA_GAPS
    if cfg.national_gaps:
        national = GapSet(**{**national.as_dict(), **cfg.national_gaps})
    g0 = reg.level_adjustment(national, reg.national_model_gaps(cfg.params, _pop_config(cfg)))
    grid = cfg.regional_grid if cfg.regional_grid is not None else reg.default_delta_grid(cfg.params)
    grid = np.unique(np.append(grid, cfg.params.delta))
    curve = reg.prediction_curve(cfg.params, grid, g0, bridge, _pop_config(cfg))
    names = GapSet.names()
    fh, w = _writer(cfg.out, "curve.csv", ("delta", "share_hat", "score_hat")
                    + tuple(f"gap_{n}_hat" for n in names))
    with fh:
        for d, f, s, g in zip(curve.deltas, curve.share, curve.score_hat, curve.gaps_hat):
            w.writerow((fmt(d), fmt(f), fmt(s), *(fmt(getattr(g, n)) for n in names)))
    fh, w = _writer(cfg.out, "data_fit.csv", ("gap", "intercept", "slope"))
    with fh:
        w.writerow(("score_on_share", fmt(bridge[0]), fmt(bridge[1])))
        for n, (a, b) in reg.data_fit(records).items():
            w.writerow((n, fmt(a), fmt(b)))
    fh, w = _writer(cfg.out, "fit_distance.csv", ("gap", "rms"))
    with fh:
        for n, v in reg.curve_vs_fit(curve, records).items():
            w.writerow((n, fmt(v)))
    fh, w = _writer(cfg.out, "level_adjustment.csv", ("gap", "g0"))
    with fh:
        for n in names:
            w.writerow((n, fmt(getattr(g0, n))))


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "counterfactual": cmd_counterfactual,
    "sweep": cmd_sweep,
    "regional": cmd_regional,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointlabor", description="Joint labor supply of couples: simulation, calibration "
        "and counterfactuals.")
    parser.add_argument("command", choices=sorted(COMMANDS), help="what to run")
    parser.add_argument("--config", metavar="PATH", help="TOML run configuration "
                        "(default: built-in calibrated parameters)")
    parser.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, metavar="U64", help="random seed for the couple draws")
    parser.add_argument("--n", type=int, metavar="COUNT", help="number of simulated couples")
    parser.add_argument("--scenario", action="append", metavar="NAME",
                        choices=cf.SCENARIO_NAMES,
                        help="scenario to run (repeatable): " + ", ".join(cf.SCENARIO_NAMES))
    parser.add_argument("--delta-grid", metavar="START:STOP:POINTS",
                        help="grid of norm penalties for sweep and regional")
    parser.add_argument("--prefecture-data", metavar="PATH",
                        help="prefecture CSV (prefecture,score,gap_*,share_wife_outearns)")
    parser.add_argument("--threads", type=int, metavar="K", help="cap on worker threads")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = "config"
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg.out = args.out
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        if args.n is not None:
            if args.n < 1:
                raise ConfigError("--n must be positive")
            cfg.n = args.n
        if args.scenario:
            cfg.scenarios = tuple(args.scenario)
        if args.delta_grid:
            grid = parse_grid(args.delta_grid)
            cfg.sweep_grid = grid
            cfg.regional_grid = grid
        if args.prefecture_data:
            cfg.prefecture_data = args.prefecture_data
        threads = args.threads or cfg.threads
        if threads:
            import numba
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        stage = "output"
        os.makedirs(cfg.out, exist_ok=True)
        stage = args.command
        COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"jointlabor: {stage}: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
