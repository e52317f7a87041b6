"""Deterministic command-line orchestration.

``flab gen|boxdim|lemma3c|triples|multiplicity|report --config <path>
[--seed <u64>] --out <dir>``

All logs go to stderr; all data go to files under --out.  Every command
writes a machine-readable summary.json (schema_version 1).  Re-running a
command with identical inputs and seed reproduces the data files byte for
byte; the only exception is the wall_times block of `report`.

Exit codes: 0 success, 2 config parse/shape error, 3 invariant violation,
4 missing input file, 5 experiment degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import fractal as fr
from . import generators as gen
from . import geometry as geo
from . import incidence as inc
from .errors import (
    ConfigInvalid,
    DegenerateFit,
    EmptyInput,
    FlabError,
    InsufficientContent,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_IO = 4
EXIT_DEGENERATE = 5

log = logging.getLogger("flab")


class DegenerateExperiment(FlabError):
    """Raised when an experiment degenerates (e.g. > 10% arc failures)."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FLAB_THREADS", "1")))
    except ValueError:
        return 1


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ValueError(f"config is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    return data


def _write_summary(outdir: str, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(os.path.join(outdir, "summary.json"), "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _generator_config(data: dict, seed_override) -> gen.FurstenbergConfig:
    if seed_override is not None:
        data = {**data, "seed": int(seed_override)}
    try:
        return gen.FurstenbergConfig.from_json_dict(data)
    except (TypeError, KeyError) as e:
        raise ValueError(str(e)) from e


def cmd_gen(config: dict, seed, outdir: str) -> dict:
    cfg = _generator_config(config, seed)
    fset = gen.assemble_furstenberg(cfg)
    fr.save_csv(fset.v.cloud, os.path.join(outdir, "v.csv"))
    fr.save_csv(fset.cloud, os.path.join(outdir, "cloud.csv"))
    log.info(
        "gen: %d circles, %d cloud points (realized s=%.4f t=%.4f)",
        len(fset.circles),
        len(fset.cloud),
        fset.realized_s,
        fset.realized_t,
    )
    return {
        "command": "gen",
        "config": {
            "s": cfg.s,
            "t": cfg.t,
            "k1": cfg.k1,
            "preset": cfg.preset,
            "seed": cfg.seed,
            "cantor": list(cfg.cantor) if cfg.cantor else None,
        },
        "realized_s": fset.realized_s,
        "realized_t": fset.realized_t,
        "n_circles": len(fset.circles),
        "n_points": len(fset.cloud),
        "conc_measured": fset.v.conc_measured,
    }


def cmd_boxdim(config: dict, seed, outdir: str) -> dict:
    path = config.get("cloud")
    if not path:
        raise ValueError("boxdim config needs a `cloud` path")
    k_range = config.get("k_range")
    if not k_range:
        raise ValueError("boxdim config needs `k_range`")
    cloud = fr.load_csv(path)
    if len(cloud) == 0:
        raise EmptyInput("cloud file has no points")
    counts = inc.box_counts_streaming([cloud.points], k_range)
    pairs = sorted(counts.items())
    _write_csv(os.path.join(outdir, "boxdim.csv"), "k,N", pairs)
    slope = inc.dimension_slope(pairs)
    out = {"command": "boxdim", "counts": {str(k): n for k, n in pairs}, "slope": slope}
    if "s" in config and "t" in config:
        s, t = float(config["s"]), float(config["t"])
        bound = max(t / 3.0 + s, (2.0 * s - 1.0) * t + s)
        out["bound"] = bound
        out["slope_minus_bound"] = slope - bound
        log.info("boxdim: slope %.4f vs bound %.4f", slope, bound)
    else:
        log.info("boxdim: slope %.4f", slope)
    return out


def _random_frame(rng, c):
    while True:
        P = rng.uniform(-1.0, 1.0, (3, 2))
        dmin = min(
            math.hypot(*(P[0] - P[1])),
            math.hypot(*(P[0] - P[2])),
            math.hypot(*(P[1] - P[2])),
        )
        if dmin >= 2.0 * c:
            return P


def cmd_lemma3c(config: dict, seed, outdir: str) -> dict:
    trials = int(config.get("trials", 0))
    if trials < 1:
        raise ValueError("lemma3c config needs `trials` >= 1")
    rng = np.random.default_rng(seed if seed is not None else config.get("seed", 0))
    rows = []
    violations = 0
    max_ratio = 0.0
    enumerated = 0
    for i in range(trials):
        c = rng.uniform(0.05, 0.5)
        P = _random_frame(rng, c)
        u = rng.random()
        a = c * c / 20.0 * (u if 0.0 < u < 1.0 else 0.5)
        frame = geo.TriangleFrame.create(P[0], P[1], P[2], c)
        bound = 2.0 * geo.THREE_CIRCLE_K * a / (c * c)
        if bound <= 10.0:
            diam = geo.w_region_sample_diameter(frame, a, a / 10.0)
            ok = diam <= bound
            ratio = diam / (a / (c * c))
            max_ratio = max(max_ratio, ratio)
            enumerated += 1
            rows.append((i, c, a, "exact", diam, ratio, int(not ok)))
        else:
            ok = geo.w_region_diameter_within(frame, a, a / 10.0, bound)
            rows.append((i, c, a, "certified", float("nan"), float("nan"), int(not ok)))
        if not ok:
            violations += 1
    _write_csv(
        os.path.join(outdir, "lemma3c.csv"),
        "trial,c,a,method,diam,ratio,violation",
        rows,
    )
    log.info(
        "lemma3c: %d trials, max ratio diam/(a/c^2) = %.4f over %d enumerated, "
        "violations vs %.0f*a/c^2: %d",
        trials,
        max_ratio,
        enumerated,
        2 * geo.THREE_CIRCLE_K,
        violations,
    )
    return {
        "command": "lemma3c",
        "trials": trials,
        "max_ratio": max_ratio,
        "enumerated": enumerated,
        "violations": violations,
        "bound_constant": 2.0 * geo.THREE_CIRCLE_K,
    }


def _arc_data(cfg: gen.FurstenbergConfig, s_prime: float, eta_rule):
    fset = gen.assemble_furstenberg(cfg)
    delta = cfg.delta
    data = []
    failures = 0
    per_z_rows = []
    for idx, (z, angles) in enumerate(zip(fset.circles, fset.angular)):
        pts = np.column_stack(
            [
                z.center[0] + z.radius * np.cos(angles),
                z.center[1] + z.radius * np.sin(angles),
            ]
        )
        try:
            if eta_rule == "auto":
                eta = inc.auto_eta(z, pts, s_prime, delta, cfg.k1)
            elif eta_rule == "paper":
                eta = 1.0 / (cfg.k1 * cfg.k1)
            else:
                eta = float(eta_rule)
            triple = inc.extract_three_arcs(
                z, pts, s_prime, eta, delta=delta, content_check=eta_rule != "auto"
            )
            data.append((triple, pts))
            per_z_rows.append(
                (idx, triple.contents[0], triple.contents[1], triple.contents[2], triple.tau)
            )
        except InsufficientContent:
            failures += 1
            data.append((None, pts))
            nan = float("nan")
            per_z_rows.append((idx, nan, nan, nan, nan))
    return fset, data, failures, per_z_rows


def cmd_triples(config: dict, seed, outdir: str) -> dict:
    gen_cfg = config.get("generator")
    if not gen_cfg:
        raise ValueError("triples config needs a `generator` object")
    s_prime = float(config.get("s_prime", 0.0))
    if not (0.0 < s_prime <= 1.0):
        raise ValueError("triples config needs s_prime in (0, 1]")
    eta_rule = config.get("eta_rule", "auto")
    cfg = _generator_config(gen_cfg, seed)
    fset, data, failures, per_z_rows = _arc_data(cfg, s_prime, eta_rule)
    _write_csv(
        os.path.join(outdir, "arcs.csv"),
        "z_index,content_plus,content_minus,content_times,tau",
        per_z_rows,
    )
    n = len(data)
    if failures > 0.1 * n:
        raise DegenerateExperiment(
            f"arc extraction failed on {failures}/{n} circles (> 10%)"
        )
    grid = inc.box_count(fset.cloud, cfg.k1)
    t_index = inc.build_triple_index(data, grid)
    cover_counts = inc.per_arc_cover_counts(data, cfg.k1)
    reference = inc.step4_reference_count(s_prime, cfg.k1)
    _write_csv(
        os.path.join(outdir, "arc_cells.csv"),
        "z_index,n_plus,n_minus,n_times",
        [(i, int(r[0]), int(r[1]), int(r[2])) for i, r in enumerate(cover_counts)],
    )
    taus = [t.tau for t, _ in data if t is not None]
    tau = min(taus) if taus else float("nan")
    ratio = inc.triple_upper_ratio(t_index, grid, tau) if taus else float("nan")
    _write_csv(
        os.path.join(outdir, "triples.csv"),
        "k1,n_cells,n_triples,tau,ratio",
        [(cfg.k1, grid.count, t_index.count, tau, ratio)],
    )
    log.info(
        "triples: #T=%d cells=%d tau=%.3g ratio=%.3g failures=%d/%d",
        t_index.count,
        grid.count,
        tau,
        ratio,
        failures,
        n,
    )
    return {
        "command": "triples",
        "n_circles": n,
        "failures": failures,
        "n_cells": grid.count,
        "n_triples": t_index.count,
        "tau": tau,
        "ratio": ratio,
        "per_arc_reference": reference,
        "min_arc_cells": int(cover_counts[cover_counts.sum(axis=1) > 0].min())
        if (cover_counts.sum(axis=1) > 0).any()
        else 0,
    }


def cmd_multiplicity(config: dict, seed, outdir: str) -> dict:
    v_path = config.get("v")
    if not v_path:
        raise ValueError("multiplicity config needs a `v` path")
    v = fr.load_csv(v_path)
    if len(v) == 0:
        raise EmptyInput("parameter file has no circles")
    if v.dim != 3:
        raise ConfigInvalid("v must be a 3-column (center, radius) cloud")
    k1 = v.k
    grid_k = int(config.get("grid_k", k1))
    s_prime = float(config.get("s_prime", 0.75))
    t_prime = float(config.get("t_prime", 0.5))
    epsilon = float(config.get("epsilon", 0.1))
    c0 = float(config.get("c0", inc.C0_DEFAULT))
    delta = 2.0 ** (-k1)
    mu = fr.frostman_measure(v).scaled(1.0 / (k1 * k1))
    field = inc.multiplicity_field(mu, delta, grid_k, workers=_workers())
    params = inc.ThresholdParams.from_exponents(
        s_prime, t_prime, epsilon, k1, c0=c0
    )
    cells = sorted(field.values)
    _write_csv(
        os.path.join(outdir, "cells_m.csv"),
        "ix,iy,m",
        [(ix, iy, field.values[(ix, iy)]) for ix, iy in cells],
    )
    ratio_rows = []
    for idx in range(len(v)):
        st = inc.low_multiplicity_subset(idx, field, params)
        ratio_rows.append((idx, st.s1_count, st.s2_count, st.area_ratio, st.threshold))
    _write_csv(
        os.path.join(outdir, "s2_ratios.csv"),
        "z_index,s1_cells,s2_cells,ratio,threshold",
        ratio_rows,
    )
    lhs = math.fsum(field.values.values())
    rhs = math.fsum(
        float(mu.weights[i]) * int(field.per_atom_counts[i]) for i in range(len(v))
    )
    fubini_exact = sum(field.incidences.values()) == int(field.per_atom_counts.sum())
    log.info(
        "multiplicity: %d cells, sup m = %.3g, fubini exact: %s",
        len(field.values),
        field.sup,
        fubini_exact,
    )
    return {
        "command": "multiplicity",
        "n_circles": len(v),
        "grid_k": grid_k,
        "n_cells": len(field.values),
        "sup_m": field.sup,
        "mass_integral": lhs,
        "mass_integral_by_atoms": rhs,
        "fubini_incidences_exact": bool(fubini_exact),
        "threshold": params.threshold,
        "lambda": params.lam,
        "eta": params.eta,
        "mean_s2_ratio": float(np.mean([r[3] for r in ratio_rows])),
    }


def cmd_report(config: dict, seed, outdir: str) -> dict:
    gen_cfg = config.get("generator")
    if not gen_cfg:
        raise ValueError("report config needs a `generator` object")
    walls = {}
    t0 = time.perf_counter()
    gen_summary = cmd_gen(gen_cfg, seed, outdir)
    walls["gen"] = time.perf_counter() - t0
    k1 = gen_summary["config"]["k1"]
    k_range = config.get("k_range", list(range(max(1, k1 - 5), k1 + 1)))
    t0 = time.perf_counter()
    box_summary = cmd_boxdim(
        {
            "cloud": os.path.join(outdir, "cloud.csv"),
            "k_range": k_range,
            "s": gen_summary["realized_s"],
            "t": gen_summary["realized_t"],
        },
        None,
        outdir,
    )
    walls["boxdim"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    triples_summary = cmd_triples(
        {
            "generator": gen_cfg,
            "s_prime": config.get("s_prime", gen_summary["realized_s"]),
            "eta_rule": config.get("eta_rule", "auto"),
        },
        seed,
        outdir,
    )
    walls["triples"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    mult_summary = cmd_multiplicity(
        {
            "v": os.path.join(outdir, "v.csv"),
            "grid_k": config.get("grid_k", k1),
            "s_prime": config.get("s_prime", max(0.55, gen_summary["realized_s"])),
            "t_prime": config.get("t_prime", gen_summary["realized_t"]),
            "epsilon": config.get("epsilon", 0.1),
        },
        None,
        outdir,
    )
    walls["multiplicity"] = time.perf_counter() - t0
    return {
        "command": "report",
        "gen": gen_summary,
        "box_counts": box_summary,
        "triples": triples_summary,
        "multiplicity": mult_summary,
        "wall_times": walls,
    }


_COMMANDS = {
    "gen": cmd_gen,
    "boxdim": cmd_boxdim,
    "lemma3c": cmd_lemma3c,
    "triples": cmd_triples,
    "multiplicity": cmd_multiplicity,
    "report": cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(prog="flab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        summary = _COMMANDS[args.command](config, args.seed, args.out)
        _write_summary(args.out, summary)
        return EXIT_OK
    except FileNotFoundError as e:
        log.error("missing file: %s", e)
        return EXIT_IO
    except (ValueError, TypeError) as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except DegenerateExperiment as e:
        log.error("degenerate experiment: %s", e)
        return EXIT_DEGENERATE
    except (ConfigInvalid, EmptyInput, DegenerateFit) as e:
        log.error("invariant violation: %s", e)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
