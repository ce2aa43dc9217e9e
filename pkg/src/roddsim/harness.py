"""Seeded experiment sweeps with CSV output.

A sweep walks one axis (frame length / symbol budget, SINR threshold, or
nominal SNR), runs the requested schemes at every grid point over a set of
independent trials, and aggregates directed-neighbor-pair miss rates.  All
schemes at one trial index consume the same network realization (paired
comparison), the on/transmit probabilities default to 1/(c+1) so every
scheme spends the same average power per active slot, and trial seeds
derive from the base seed as ``base XOR trial``, so a config plus seed
reproduces every statistical output byte for byte.  Wall-clock columns are
measurement, not part of the reproducibility contract.

Config files are JSON with the field names of ``SweepConfig``; the network
block nests under ``net``.  Quantities that are physically ratios (gamma,
sinr_threshold) accept either linear numbers or strings with a dB suffix
("60dB").
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace

import numpy as np

from .baselines import (
    RaParams,
    aloha_error_lower_bound,
    csma_error_lower_bound,
    packet_bits,
    simulate_aloha,
    simulate_csma,
)
from .decoder import DecodeOptions, decode
from .geometry import (
    NetworkParams,
    core_mask,
    generate_network,
    mean_neighbor_count,
)
from .phy import RoddParams, draw_messages, make_frame, simulate_frame
from .prior import build_prior

SCHEMES = ("rodd", "aloha_mc", "csma_mc", "aloha_bound", "csma_bound")
AXES = ("frame_len", "sinr_threshold", "snr")
CSV_HEADER = ("scheme", "axis", "value", "miss_prob", "stderr", "trials", "wall_ms")


def parse_linear(value) -> float:
    """Linear ratio from a number or a '<x>dB' string."""
    if isinstance(value, str):
        text = value.strip()
        if text.lower().endswith("db"):
            return float(10.0 ** (float(text[:-2]) / 10.0))
        return float(text)
    return float(value)


@dataclass(frozen=True)
class SweepConfig:
    """One experiment: axis grid, schemes, statistical budget, seeds.

    message_bits/frame_len/on_prob configure the on-off scheme (on_prob
    None means 1/(c+1)); sinr_threshold/tx_prob/id_bits configure the
    random-access baselines (tx_prob None likewise, id_bits None means
    ceil(log2 c)).  ``receivers_per_trial`` caps how many receivers are
    decoded per realization (None decodes all), trading precision for time
    on the heavy grids.
    """

    experiment: str
    net: NetworkParams
    axis: str
    grid: tuple
    schemes: tuple
    trials: int = 200
    base_seed: int = 0
    message_bits: int = 5
    frame_len: int = 280
    on_prob: float | None = None
    sinr_threshold: float = 3.5
    tx_prob: float | None = None
    id_bits: int | None = None
    boundary_margin: float | None = None
    mode: str = "gaussian"
    receivers_per_trial: int | None = None
    max_iters: int = 20
    gamma_s_raw: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.grid:
            raise ValueError("sweep grid must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        if self.mode not in ("gaussian", "explicit"):
            raise ValueError(f"unknown interference mode {self.mode!r}")


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    axis: str
    value: float
    miss_prob: float
    stderr: float
    trials: int
    wall_ms: float


def config_from_dict(d: dict) -> SweepConfig:
    d = dict(d)
    net = d.pop("net")
    net = NetworkParams(
        intensity=float(net["intensity"]),
        side=float(net["side"]),
        alpha=float(net["alpha"]),
        theta=float(net["theta"]),
        gamma=parse_linear(net["gamma"]),
        fixed_count=net.get("fixed_count"),
    )
    if "sinr_threshold" in d:
        d["sinr_threshold"] = parse_linear(d["sinr_threshold"])
    if d.get("axis") == "snr":
        d["grid"] = [parse_linear(v) for v in d["grid"]]
    d["grid"] = tuple(d["grid"])
    d["schemes"] = tuple(d["schemes"])
    return SweepConfig(net=net, **d)


def load_config(path) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as f:
        return config_from_dict(json.load(f))


def _point_params(cfg: SweepConfig, value):
    """Network, on-off, and random-access parameters at one grid point."""
    net = cfg.net
    if cfg.axis == "snr":
        net = replace(net, gamma=float(value))
    c = mean_neighbor_count(net)
    q = cfg.on_prob if cfg.on_prob is not None else 1.0 / (c + 1.0)
    p = cfg.tx_prob if cfg.tx_prob is not None else 1.0 / (c + 1.0)
    frame_len = int(value) if cfg.axis == "frame_len" else cfg.frame_len
    delta = float(value) if cfg.axis == "sinr_threshold" else cfg.sinr_threshold
    bits = (
        cfg.message_bits + cfg.id_bits
        if cfg.id_bits is not None
        else packet_bits(cfg.message_bits, c)
    )
    rodd = RoddParams(message_bits=cfg.message_bits, frame_len=frame_len, on_prob=q)
    budget = int(value) if cfg.axis == "frame_len" else cfg.frame_len
    ra = RaParams(
        net=net, packet_bits=bits, sinr_threshold=delta, tx_prob=p, budget=budget
    )
    return net, rodd, ra


def _rodd_trial(cfg: SweepConfig, net_real, rodd: RoddParams, prior, seed: int):
    """Decode sampled receivers of one realization; return (misses, pairs)."""
    n = net_real.num_nodes
    messages = draw_messages(n, rodd, seed)
    frame = make_frame(n, rodd, messages, seed)
    if cfg.boundary_margin is not None:
        candidates = np.flatnonzero(core_mask(net_real, cfg.boundary_margin))
    else:
        candidates = np.arange(n)
    if cfg.receivers_per_trial is not None and cfg.receivers_per_trial < len(candidates):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x8ECE17E5)))
        candidates = rng.choice(candidates, cfg.receivers_per_trial, replace=False)
    options = DecodeOptions(
        max_iters=cfg.max_iters,
        gamma_s=None
        if not cfg.gamma_s_raw
        else net_real.params.gamma * rodd.mean_symbol_degree,
    )
    misses = 0
    pairs = 0
    for r in sorted(int(r) for r in candidates):
        inst = simulate_frame(
            net_real, rodd, messages, r, mode=cfg.mode, seed=seed, frame=frame
        )
        if inst.num_neighbors == 0:
            continue
        result = decode(inst, prior, options)
        misses += int((result.indices != inst.messages).sum())
        pairs += inst.num_neighbors
    return misses, pairs


def _mc_trial_task(args):
    """All Monte Carlo schemes for one (grid value, trial); worker-safe."""
    cfg, value, trial = args
    net, rodd, ra = _point_params(cfg, value)
    mc_schemes = [s for s in cfg.schemes if s in ("rodd", "aloha_mc", "csma_mc")]
    prior = (
        build_prior(net.theta, net.alpha, cfg.message_bits)
        if "rodd" in mc_schemes
        else None
    )
    seed = cfg.base_seed ^ trial
    net_real = generate_network(net, seed)
    out = []
    for scheme in mc_schemes:
        start = time.perf_counter()
        if scheme == "rodd":
            misses, pairs = _rodd_trial(cfg, net_real, rodd, prior, seed)
            rate = misses / pairs if pairs else 0.0
        elif scheme == "aloha_mc":
            rate = simulate_aloha(net_real, ra, seed, margin=cfg.boundary_margin).miss_prob
        else:
            rate = simulate_csma(net_real, ra, seed, margin=cfg.boundary_margin).miss_prob
        out.append((scheme, rate, time.perf_counter() - start))
    return out


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[ResultRow]:
    """Run every scheme over the grid; deterministic given the config.

    ``workers`` > 1 spreads (grid point, trial) tasks over processes; the
    aggregation is order-independent, so the output matches a serial run.
    """
    rows: list[ResultRow] = []
    mc_schemes = [s for s in cfg.schemes if s in ("rodd", "aloha_mc", "csma_mc")]
    for value in cfg.grid:
        _, _, ra = _point_params(cfg, value)
        for scheme in cfg.schemes:
            if scheme not in ("aloha_bound", "csma_bound"):
                continue
            start = time.perf_counter()
            bound = (
                aloha_error_lower_bound(ra)
                if scheme == "aloha_bound"
                else csma_error_lower_bound(ra)
            )
            rows.append(
                ResultRow(
                    scheme=scheme,
                    axis=cfg.axis,
                    value=float(value),
                    miss_prob=float(bound),
                    stderr=0.0,
                    trials=0,
                    wall_ms=(time.perf_counter() - start) * 1e3,
                )
            )

    if mc_schemes:
        tasks = [(cfg, value, trial) for value in cfg.grid for trial in range(cfg.trials)]
        if workers > 1:
            from multiprocessing import Pool

            with Pool(workers) as pool:
                results = pool.map(_mc_trial_task, tasks)
        else:
            results = [_mc_trial_task(t) for t in tasks]

        for value in cfg.grid:
            per_scheme: dict[str, list[float]] = {s: [] for s in mc_schemes}
            walls: dict[str, float] = {s: 0.0 for s in mc_schemes}
            for (tcfg, tvalue, _), res in zip(tasks, results):
                if tvalue != value:
                    continue
                for scheme, rate, wall in res:
                    per_scheme[scheme].append(rate)
                    walls[scheme] += wall
            for scheme in mc_schemes:
                r = np.asarray(per_scheme[scheme])
                stderr = float(r.std(ddof=1) / np.sqrt(len(r))) if len(r) > 1 else 0.0
                rows.append(
                    ResultRow(
                        scheme=scheme,
                        axis=cfg.axis,
                        value=float(value),
                        miss_prob=float(r.mean()),
                        stderr=stderr,
                        trials=cfg.trials,
                        wall_ms=walls[scheme] * 1e3,
                    )
                )
    rows.sort(key=lambda row: (row.scheme, row.value))
    return rows


def emit_csv(rows, path, *, drop_timing: bool = False) -> None:
    """Write result rows sorted by (scheme, axis value), UTF-8 with LF.

    ``drop_timing`` zeroes the wall-clock column, which is the one field
    not reproducible from (config, seed).
    """
    rows = sorted(rows, key=lambda row: (row.scheme, row.value))
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(
                [
                    r.scheme,
                    r.axis,
                    f"{r.value:.10g}",
                    f"{r.miss_prob:.10g}",
                    f"{r.stderr:.10g}",
                    r.trials,
                    0 if drop_timing else int(round(r.wall_ms)),
                ]
            )


def read_csv(path) -> list[ResultRow]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for rec in csv.DictReader(f):
            out.append(
                ResultRow(
                    scheme=rec["scheme"],
                    axis=rec["axis"],
                    value=float(rec["value"]),
                    miss_prob=float(rec["miss_prob"]),
                    stderr=float(rec["stderr"]),
                    trials=int(rec["trials"]),
                    wall_ms=float(rec["wall_ms"]),
                )
            )
    return out
