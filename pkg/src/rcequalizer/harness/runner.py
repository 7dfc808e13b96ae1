"""Single runs, multi-mask cells and parameter scans."""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..channel import LOOKAHEAD, WARMUP, ChannelParams, noise_amplitude_for, signal_power, transmit
from ..pipeline import PHASE_TEST, SimulationResult, simulate
from ..prng import MaskRng, NoiseSource, SymbolSource
from ..reservoir import ReservoirConfig
from ..trainer import align_target
from .config import ExperimentConfig, validate

log = logging.getLogger(__name__)


def derive_seed(base: int, *coords) -> int:
    """Stable 63-bit seed from a base seed and any JSON-serialisable coordinates."""
    payload = json.dumps([int(base), *coords], sort_keys=True, default=str).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little") >> 1


@dataclass
class Streams:
    u: np.ndarray
    target: np.ndarray
    counted: np.ndarray
    params: dict
    noise_amplitude: float


def build_streams(cfg: ExperimentConfig, stream_seed: int) -> Streams:
    c = cfg.channel
    length = cfg.run.stream_length(cfg.reservoir.washout, cfg.trainer.train_length)
    base = c.params()
    symbols = SymbolSource.from_seed(stream_seed, tuple(c.symbol_poly_a), tuple(c.symbol_poly_b)).take(length)
    amplitude = 0.0
    noise = None
    if not (math.isinf(c.snr_db) and c.snr_db > 0):
        amplitude = noise_amplitude_for(c.snr_db, _power(base, c.calibration_length))
        noise = NoiseSource.from_seed(stream_seed, tuple(c.noise_poly)).take(length, amplitude)
    tx = transmit(symbols, replace(base, noise_amplitude=amplitude), c.schedule.build(), noise)
    # the readout output of step j follows u[j]; its zero-delay target is the next centre symbol
    upcoming = np.full(length, np.nan)
    upcoming[:-1] = tx.center[1:]
    target = align_target(upcoming, cfg.trainer.target_delay)
    idx = np.arange(length)
    counted = tx.valid & np.isfinite(target) & (idx + 1 - cfg.trainer.target_delay >= LOOKAHEAD)
    return Streams(tx.u, target, counted, tx.params, amplitude)


_power_cache: dict = {}


def _power(params: ChannelParams, calibration_length: int) -> float:
    key = (params, calibration_length)
    if key not in _power_cache:
        _power_cache[key] = signal_power(params, calibration_length)
    return _power_cache[key]


@dataclass
class MaskResult:
    mask_seed: int
    ser: float                 # test-phase SER (NaN if the run never stopped training)
    scored_ser: float          # SER over every scored symbol, training included
    test_symbols: int
    window_ser: list
    window_lambda: list
    window_end: list
    resets: list
    window_count: list = field(default_factory=list)
    saturation: dict = field(default_factory=dict)
    final_lambda: float = 0.0


@dataclass
class RunResult:
    name: str
    cell: dict
    config: dict
    masks: list
    mean_ser: float
    min_ser: float
    max_ser: float
    noise_amplitude: float
    wall_time: float
    best: bool = False

    @property
    def sers(self) -> np.ndarray:
        return np.array([m.ser for m in self.masks])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        data = dict(data)
        data["masks"] = [MaskResult(**m) for m in data["masks"]]
        return cls(**data)


def mask_seed_for(cfg: ExperimentConfig, index: int) -> int:
    return derive_seed(cfg.seed, "mask", index)


def reservoir_config(cfg: ExperimentConfig, mask_seed: int) -> ReservoirConfig:
    r = cfg.reservoir
    mask = MaskRng(mask_seed).draw_mask(r.n)
    return ReservoirConfig(mask, r.effective_alpha(), r.beta, r.phi, r.washout, r.readout_gain)


def simulate_mask(cfg: ExperimentConfig, mask_seed: int, streams: Streams | None = None,
                  record_outputs: bool = False) -> tuple[SimulationResult, Streams]:
    streams = streams or build_streams(cfg, derive_seed(cfg.seed, "stream"))
    res = reservoir_config(cfg, mask_seed)
    sim = simulate(streams.u, streams.target, streams.counted, res, cfg.trainer.build(),
                   window=cfg.evaluator.window, fixed=cfg.run.pipeline == "fixed",
                   state_noise=cfg.reservoir.state_noise, noise_seed=mask_seed & 0x7FFFFFFF,
                   adc_bits=cfg.run.adc_bits, record_outputs=record_outputs)
    return sim, streams


def _mask_result(mask_seed: int, sim: SimulationResult) -> MaskResult:
    return MaskResult(
        mask_seed=int(mask_seed),
        ser=sim.test_ser(),
        scored_ser=sim.scored_ser(),
        test_symbols=int((sim.phase == PHASE_TEST).sum()),
        window_ser=[float(v) for v in sim.window_ser],
        window_lambda=[float(v) for v in sim.window_lambda],
        window_end=[int(v) for v in sim.window_end],
        resets=[int(v) for v in sim.resets],
        window_count=[int(v) for v in sim.window_counts],
        saturation=dict(sim.saturation),
        final_lambda=float(sim.lam),
    )


def _summary(values):
    arr = np.array(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    if not arr.size:
        return math.nan, math.nan, math.nan
    return float(arr.mean()), float(arr.min()), float(arr.max())


def run_single(cfg: ExperimentConfig, mask_seed: int) -> RunResult:
    """Washout, training and test for one input mask."""
    validate(cfg)
    t0 = time.perf_counter()
    sim, streams = simulate_mask(cfg, mask_seed)
    mr = _mask_result(mask_seed, sim)
    return RunResult(cfg.name, {}, cfg.to_dict(), [mr], mr.ser, mr.ser, mr.ser, streams.noise_amplitude,
                     time.perf_counter() - t0)


def run_cell(cfg: ExperimentConfig, cell: dict | None = None) -> RunResult:
    """Run ``cfg.run.masks`` masks on one configuration.

    All masks share the cell's symbol/noise stream so that they differ only
    in the mask.
    """
    cell = cell or {}
    if cell:
        cfg = cfg.with_values(cell)
        cfg.seed = derive_seed(cfg.seed, sorted(cell.items()))
    validate(cfg)
    t0 = time.perf_counter()
    streams = build_streams(cfg, derive_seed(cfg.seed, "stream"))
    masks = []
    for i in range(cfg.run.masks):
        seed = mask_seed_for(cfg, i)
        sim, _ = simulate_mask(cfg, seed, streams)
        masks.append(_mask_result(seed, sim))
    mean, lo, hi = _summary([m.ser for m in masks])
    return RunResult(cfg.name, dict(cell), cfg.to_dict(), masks, mean, lo, hi, streams.noise_amplitude,
                     time.perf_counter() - t0)


def grid_cells(scan: dict, variants: list | None = None) -> list[dict]:
    """Every variant crossed with the Cartesian product of the scan grids."""
    keys = list(scan)
    grid = [dict(zip(keys, combo)) for combo in itertools.product(*(scan[k] for k in keys))]
    return [{**v, **g} for v in (variants or [{}]) for g in grid]


def _cell_key(cell: dict):
    return tuple((k, (math.inf if v is None else v)) for k, v in sorted(cell.items()))


def mark_best(results: list[RunResult]) -> RunResult | None:
    """Flag the cell with the lowest mean SER; ties go to the lexicographically first cell."""
    finite = [r for r in results if np.isfinite(r.mean_ser)]
    for r in results:
        r.best = False
    if not finite:
        return None
    best = min(finite, key=lambda r: (r.mean_ser, _cell_key(r.cell)))
    best.best = True
    return best


def run_scan(cfg: ExperimentConfig, workers: int | None = None) -> list[RunResult]:
    """Cartesian product of the scan grids (times any variants), one :class:`RunResult` per cell."""
    if not cfg.scan and not cfg.variants:
        raise ValueError("scan grids are empty")
    validate(cfg)
    cells = grid_cells(cfg.scan, cfg.variants)
    base = cfg.copy()
    base.scan = {}
    base.variants = []
    workers = workers or cfg.run.workers
    log.info("scan %s: %d cells x %d masks", cfg.name, len(cells), cfg.run.masks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: run_cell(base, c), cells))
    else:
        results = [run_cell(base, c) for c in cells]
    mark_best(results)
    return results
