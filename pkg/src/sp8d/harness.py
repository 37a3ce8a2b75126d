"""Monte Carlo harness: post-FEC BER sweeps, GMI sweeps, complexity
reports and codebook dumps, with CSV/JSON output.

Reproducibility contract: every result is a pure function of the
configuration and the master seed. Work is split into fixed-size batches
whose random substreams are keyed by (seed, sweep point, batch index);
per-batch partials are reduced in batch order, so worker count and
scheduling never change the output, byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import multiprocessing
import numpy as np

from . import beq, channel, demap, fec, modem
from .beq import FormatSpec
from .demap import NonlinearFormatError, PosdParams

__all__ = [
    "SimConfig", "SimResult", "ComplexityRow", "ConfigError",
    "run_ber_sweep", "run_gmi_sweep", "run_complexity_report",
    "emit_results", "parse_results", "emit_complexity", "dump_codebook",
    "gmi_from_llrs", "gmi_crossing",
    "GMI_BATCH_FRAMES", "BER_BATCH_FRAMES", "LLR_CLAMP",
]

# Fixed batch sizes; part of the random-stream definition (changing them
# changes the draws, like changing the seed).
GMI_BATCH_FRAMES = 8192   # frames = 8D symbols
BER_BATCH_FRAMES = 32     # frames = LDPC codewords
LLR_CLAMP = 50.0
_OPS_SAMPLE_FRAMES = 128

DEMAPPERS = ("1d", "mlm", "ms", "posd")


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class SimConfig:
    """One sweep description (post-FEC BER or GMI)."""

    format: str = "pb6b8d"          # shipped name or path to a .fmt file
    demapper: str = "mlm"           # 1d | mlm | ms | posd
    p: int | None = None            # LRP count for posd (None: recommended)
    snr_start: float = 5.0
    snr_stop: float = 8.0
    snr_step: float = 0.5
    target_errors: int = 100        # post-FEC bit errors per point
    max_frames: int = 10_000        # LDPC frames per point
    frames: int = 100_000           # 8D-symbol frames per GMI point
    ldpc: str = "builtin:n=1800,rate=0.8333,seed=1"
    seed: int = 1
    workers: int = 1


@dataclass(frozen=True)
class SimResult:
    """One row of a sweep; fields not measured by a run are None."""

    snr_db: float
    frames: int
    prefec_ber: float | None = None
    postfec_ber: float | None = None
    gmi_bits: float | None = None
    mean_iters: float | None = None
    ops_logical: int | None = None
    ops_add: int | None = None
    ops_cmp_min: int | None = None
    ops_cmp_max: int | None = None


@dataclass(frozen=True)
class ComplexityRow:
    """Instrumented per-8D-symbol operation counts for one pairing."""

    format: str
    demapper: str
    p: int | None
    frames: int
    applicable: bool
    ops_logical: int | None = None
    ops_add: int | None = None
    ops_cmp_min: int | None = None
    ops_cmp_max: int | None = None


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _snr_grid(cfg: SimConfig) -> list[float]:
    if cfg.snr_step <= 0:
        raise ConfigError("snr_step must be > 0")
    if cfg.snr_stop < cfg.snr_start:
        raise ConfigError("snr_stop must be >= snr_start")
    count = int(math.floor((cfg.snr_stop - cfg.snr_start) / cfg.snr_step + 1e-9)) + 1
    return [round(cfg.snr_start + i * cfg.snr_step, 12) for i in range(count)]


def parse_ldpc_source(text: str) -> dict:
    """Parse 'builtin:n=...,rate=...,seed=...' or 'alist:<path>'."""
    kind, _, rest = text.partition(":")
    if kind == "builtin":
        params = {"n": 1800, "rate": 5.0 / 6.0, "seed": 1}
        if rest:
            for item in rest.split(","):
                key, _, val = item.partition("=")
                key = key.strip()
                if key not in params:
                    raise ConfigError(f"unknown builtin LDPC parameter {key!r}")
                params[key] = float(val) if key == "rate" else int(val)
        return {"kind": "builtin", **params}
    if kind == "alist":
        if not rest:
            raise ConfigError("alist LDPC source needs a path")
        return {"kind": "alist", "path": rest}
    raise ConfigError(f"unknown LDPC source {text!r}")


def _build_code(source: dict) -> fec.LdpcCode:
    if source["kind"] == "builtin":
        return fec.make_regular_code(source["n"], source["rate"], source["seed"])
    with open(source["path"], "r", encoding="utf-8") as fh:
        return fec.load_alist(fh.read())


def _load_format_checked(name: str) -> FormatSpec:
    try:
        return beq.load_format(name)
    except FileNotFoundError:
        raise ConfigError(f"format {name!r}: no shipped format or file with that name")
    except beq.FormatParseError as exc:
        raise ConfigError(f"format {name!r}: {exc}")


def _resolve(cfg: SimConfig):
    """Validate a config and build (spec, codebook, resolved p)."""
    if cfg.demapper not in DEMAPPERS:
        raise ConfigError(f"unknown demapper {cfg.demapper!r}")
    spec = _load_format_checked(cfg.format)
    p = cfg.p if cfg.p is not None else beq.recommended_lrp_count(spec)
    if cfg.demapper == "posd" and not 0 <= p <= spec.m:
        raise ConfigError(f"p={p} out of range for m={spec.m}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.demapper == "ms":
        demap._ms_checks(spec)  # raises NonlinearFormatError when inapplicable
    codebook = modem.build_codebook(spec)
    return spec, codebook, p


def _batch_demapper(name: str, spec: FormatSpec, codebook: modem.Codebook, p: int):
    if name == "1d":
        return lambda obs: demap.demap_1d_batch(obs, spec)
    if name == "mlm":
        return lambda obs: demap.demap_mlm_batch(obs, codebook)
    if name == "ms":
        return lambda obs: demap.demap_ms_batch(obs, spec)
    params = PosdParams(p)
    return lambda obs: demap.demap_posd_batch(obs, spec, params)


# ---------------------------------------------------------------------------
# GMI estimation
# ---------------------------------------------------------------------------

def gmi_from_llrs(llrs: np.ndarray, bits: np.ndarray) -> float:
    """GMI in bits per frame from (N, m) LLRs and the true bits.

    Sum over bits of 1 - mean(log2(1 + exp(-(1-2b) L))), clamped at 0;
    LLRs are clamped to +-LLR_CLAMP before the exponential.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    bits = np.asarray(bits)
    m = llrs.shape[1]
    total = _softplus_sum(llrs, bits)
    return max(0.0, m - total / llrs.shape[0])


def _softplus_sum(llrs: np.ndarray, bits: np.ndarray) -> float:
    x = -(1.0 - 2.0 * bits.astype(np.float64)) * np.clip(llrs, -LLR_CLAMP, LLR_CLAMP)
    return float(np.log1p(np.exp(x)).sum() / math.log(2.0))


def gmi_crossing(rows: list[SimResult], threshold: float) -> float:
    """SNR (dB) where the GMI curve crosses a threshold, by linear
    interpolation on an SNR-sorted sweep."""
    pts = sorted((r.snr_db, r.gmi_bits) for r in rows if r.gmi_bits is not None)
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y0 <= threshold <= y1 and y1 > y0:
            return x0 + (threshold - y0) * (x1 - x0) / (y1 - y0)
    raise ValueError(f"GMI never crosses {threshold} on the sampled grid")


# ---------------------------------------------------------------------------
# Worker plumbing
# ---------------------------------------------------------------------------

_CTX: dict = {}


def _init_worker(payload: dict) -> None:
    """Build per-process state from a picklable payload."""
    cfg = SimConfig(**payload["config"])
    spec, codebook, p = _resolve(cfg)
    _CTX.clear()
    _CTX.update(payload)
    _CTX["spec"] = spec
    _CTX["codebook"] = codebook
    _CTX["p"] = p
    _CTX["demap_fn"] = _batch_demapper(cfg.demapper, spec, codebook, p)
    _CTX["seed"] = cfg.seed
    if payload["mode"] == "ber":
        _CTX["code"] = _build_code(parse_ldpc_source(cfg.ldpc))


def _bits_to_index(bits: np.ndarray) -> np.ndarray:
    m = bits.shape[-1]
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return bits.astype(np.int64) @ weights


def _gmi_batch(task) -> tuple:
    """One GMI batch: (sum of softplus terms, pre-FEC bit errors, frames)."""
    point_idx, snr_db, batch_idx, nframes = task
    spec: FormatSpec = _CTX["spec"]
    codebook: modem.Codebook = _CTX["codebook"]
    sigma = channel.snr_to_sigma(snr_db)
    rng = channel.substream(_CTX["seed"], channel.DOMAIN_GMI, point_idx, batch_idx)
    bits = rng.integers(0, 2, size=(nframes, spec.m), dtype=np.uint8)
    symbols = codebook.symbols[_bits_to_index(bits)]
    y = symbols + rng.normal(0.0, sigma, size=symbols.shape)
    obs = channel.observations(y, sigma)
    llrs = _CTX["demap_fn"](obs)
    softplus = _softplus_sum(llrs, bits)
    pre_err = int(np.count_nonzero((llrs < 0).astype(np.uint8) != bits))
    return softplus, pre_err, nframes


def _ber_batch(task) -> tuple:
    """One post-FEC batch over LDPC frames.

    Returns (pre-FEC errors, post-FEC errors, frames, iteration sum,
    softplus sum, demapped bit count).
    """
    point_idx, snr_db, batch_idx, nframes = task
    spec: FormatSpec = _CTX["spec"]
    codebook: modem.Codebook = _CTX["codebook"]
    code: fec.LdpcCode = _CTX["code"]
    m = spec.m
    sigma = channel.snr_to_sigma(snr_db)
    rng = channel.substream(_CTX["seed"], channel.DOMAIN_SIM, point_idx, batch_idx)

    u = rng.integers(0, 2, size=(nframes, code.k), dtype=np.uint8)
    cw = fec.ldpc_encode_batch(code, u)
    n_sym = -(-code.n // m)  # codeword split into m-bit labels, zero-padded
    labels = np.zeros((nframes, n_sym * m), dtype=np.uint8)
    labels[:, : code.n] = cw
    labels = labels.reshape(nframes * n_sym, m)
    symbols = codebook.symbols[_bits_to_index(labels)]
    y = symbols + rng.normal(0.0, sigma, size=symbols.shape)
    obs = channel.observations(y, sigma)
    llrs = _CTX["demap_fn"](obs).reshape(nframes, n_sym * m)[:, : code.n]

    pre_err = int(np.count_nonzero((llrs < 0).astype(np.uint8) != cw))
    softplus = _softplus_sum(llrs, cw)
    bits, iters, _ = fec.ldpc_decode_ms_batch(code, llrs, max_iter=20)
    post_err = int(np.count_nonzero(bits[:, code.info_cols] != u))
    return pre_err, post_err, nframes, int(iters.sum()), softplus, nframes * code.n


def _run_batches(cfg: SimConfig, mode: str, tasks_per_point, reduce_point):
    """Execute batch tasks per point, reducing partials in batch order.

    ``tasks_per_point(point_idx, snr)`` yields task tuples; ``reduce_point``
    folds the ordered partials and signals early stop. Batches that workers
    compute past a stop point are discarded, keeping results independent of
    worker count.
    """
    payload = {"config": asdict(cfg), "mode": mode}
    fn = _gmi_batch if mode == "gmi" else _ber_batch
    grid = _snr_grid(cfg)
    rows = []
    if cfg.workers == 1:
        _init_worker(payload)
        for point_idx, snr in enumerate(grid):
            partials = []
            for task in tasks_per_point(point_idx, snr):
                partials.append(fn(task))
                if reduce_point.early_stop(partials):
                    break
            rows.append(reduce_point(snr, partials))
        return rows
    mp_ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=mp_ctx,
                             initializer=_init_worker, initargs=(payload,)) as pool:
        for point_idx, snr in enumerate(grid):
            tasks = list(tasks_per_point(point_idx, snr))
            partials = []
            pos = 0
            stopped = False
            while pos < len(tasks) and not stopped:
                wave = tasks[pos: pos + 2 * cfg.workers]
                pos += len(wave)
                for result in pool.map(fn, wave):
                    partials.append(result)
                    if reduce_point.early_stop(partials):
                        stopped = True
                        break
            rows.append(reduce_point(snr, partials))
    return rows


class _GmiReduce:
    def __init__(self, m: int, ops: tuple):
        self.m = m
        self.ops = ops

    @staticmethod
    def early_stop(partials) -> bool:
        return False

    def __call__(self, snr: float, partials) -> SimResult:
        softplus = sum(p[0] for p in partials)
        pre_err = sum(p[1] for p in partials)
        frames = sum(p[2] for p in partials)
        return SimResult(
            snr_db=snr, frames=frames,
            prefec_ber=pre_err / (frames * self.m),
            gmi_bits=max(0.0, self.m - softplus / frames),
            ops_logical=self.ops[0], ops_add=self.ops[1],
            ops_cmp_min=self.ops[2], ops_cmp_max=self.ops[3],
        )


class _BerReduce:
    def __init__(self, k: int, m_bits: int, target_errors: int, ops: tuple):
        self.k = k
        self.m_bits = m_bits
        self.target_errors = target_errors
        self.ops = ops

    def early_stop(self, partials) -> bool:
        return sum(p[1] for p in partials) >= self.target_errors

    def __call__(self, snr: float, partials) -> SimResult:
        pre_err = sum(p[0] for p in partials)
        post_err = sum(p[1] for p in partials)
        frames = sum(p[2] for p in partials)
        iters = sum(p[3] for p in partials)
        softplus = sum(p[4] for p in partials)
        demapped = sum(p[5] for p in partials)
        return SimResult(
            snr_db=snr, frames=frames,
            prefec_ber=pre_err / demapped,
            postfec_ber=post_err / (frames * self.k),
            gmi_bits=max(0.0, self.m_bits - softplus * self.m_bits / demapped),
            mean_iters=iters / frames,
            ops_logical=self.ops[0], ops_add=self.ops[1],
            ops_cmp_min=self.ops[2], ops_cmp_max=self.ops[3],
        )


# ---------------------------------------------------------------------------
# Public sweeps
# ---------------------------------------------------------------------------

def _ops_sample(spec: FormatSpec, demapper: str, p: int, seed: int,
                frames: int = _OPS_SAMPLE_FRAMES) -> tuple:
    """(logical, additions, cmp_min, cmp_max) over an instrumented sample."""
    rng = channel.substream(seed, channel.DOMAIN_OPS, 0)
    params = PosdParams(p) if demapper == "posd" else None
    logical = additions = None
    cmp_min = cmp_max = None
    for _ in range(frames):
        obs = rng.normal(0.0, 1.0, size=spec.n)
        counts = demap.count_ops(demapper, spec, obs, params=params)
        logical = counts.logical if logical is None else logical
        additions = counts.additions if additions is None else additions
        if counts.logical != logical or counts.additions != additions:
            raise AssertionError("logical/addition counts must be input-independent")
        cmp_min = counts.comparisons if cmp_min is None else min(cmp_min, counts.comparisons)
        cmp_max = counts.comparisons if cmp_max is None else max(cmp_max, counts.comparisons)
    return logical, additions, cmp_min, cmp_max


def run_gmi_sweep(config: SimConfig) -> list[SimResult]:
    """GMI vs SNR for one (format, demapper); no FEC involved."""
    spec, codebook, p = _resolve(config)
    _snr_grid(config)
    if config.frames < 1:
        raise ConfigError("frames must be >= 1")
    ops = _ops_sample(spec, config.demapper, p, config.seed)

    def tasks(point_idx, snr):
        left = config.frames
        batch_idx = 0
        while left > 0:
            take = min(left, GMI_BATCH_FRAMES)
            yield (point_idx, snr, batch_idx, take)
            left -= take
            batch_idx += 1

    return _run_batches(config, "gmi", tasks, _GmiReduce(spec.m, ops))


def run_ber_sweep(config: SimConfig) -> list[SimResult]:
    """Post-FEC BER vs SNR through the full encode/map/noise/demap/decode
    chain; stops each point at target_errors or max_frames."""
    spec, codebook, p = _resolve(config)
    _snr_grid(config)
    if config.max_frames < 1:
        raise ConfigError("max_frames must be >= 1")
    if config.target_errors < 1:
        raise ConfigError("target_errors must be >= 1")
    code = _build_code(parse_ldpc_source(config.ldpc))
    ops = _ops_sample(spec, config.demapper, p, config.seed)

    def tasks(point_idx, snr):
        left = config.max_frames
        batch_idx = 0
        while left > 0:
            take = min(left, BER_BATCH_FRAMES)
            yield (point_idx, snr, batch_idx, take)
            left -= take
            batch_idx += 1

    reduce_point = _BerReduce(code.k, spec.m, config.target_errors, ops)
    return _run_batches(config, "ber", tasks, reduce_point)


def run_complexity_report(formats, demappers, frames: int = 10_000,
                          seed: int = 1) -> list[ComplexityRow]:
    """Instrumented operation counts per (format, demapper).

    Logical/addition counts are input-independent and verified on a small
    sample; the input-dependent comparison spread comes from instrumenting
    the LRP sort over all ``frames`` draws. Inapplicable pairs (min-sum on
    a nonlinear format) are reported as not applicable.
    """
    if isinstance(formats, str):
        formats = [formats]
    if isinstance(demappers, str):
        demappers = [demappers]
    rows = []
    for fmt in formats:
        spec = _load_format_checked(fmt)
        p = beq.recommended_lrp_count(spec)
        for dem in demappers:
            if dem not in DEMAPPERS:
                raise ConfigError(f"unknown demapper {dem!r}")
            if dem == "ms":
                try:
                    demap._ms_checks(spec)
                except NonlinearFormatError:
                    rows.append(ComplexityRow(spec.name, dem, None, frames, applicable=False))
                    continue
            logical, additions, cmp_min, cmp_max = _ops_sample(
                spec, dem, p, seed, frames=min(frames, _OPS_SAMPLE_FRAMES))
            if dem == "posd" and frames > _OPS_SAMPLE_FRAMES:
                # Only the sort varies; spread it over the full sample.
                fixed = cmp_min - _sort_comparisons_sample(spec, p, seed, _OPS_SAMPLE_FRAMES)[0]
                smin, smax = _sort_comparisons_sample(spec, p, seed, frames)
                cmp_min, cmp_max = fixed + smin, fixed + smax
            rows.append(ComplexityRow(
                spec.name, dem, p if dem == "posd" else None, frames,
                applicable=True, ops_logical=logical, ops_add=additions,
                ops_cmp_min=cmp_min, ops_cmp_max=cmp_max))
    return rows


def _sort_comparisons_sample(spec: FormatSpec, p: int, seed: int, frames: int):
    """(min, max) comparisons spent by select_lrp over a seeded sample."""
    rng = channel.substream(seed, channel.DOMAIN_OPS, 0)
    lo = hi = None
    for _ in range(frames):
        obs = rng.normal(0.0, 1.0, size=spec.n)
        _, comps = demap.select_lrp(obs, spec.m, p)
        lo = comps if lo is None else min(lo, comps)
        hi = comps if hi is None else max(hi, comps)
    return lo, hi


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

CSV_COLUMNS = ["snr_db", "frames", "prefec_ber", "postfec_ber", "gmi_bits",
               "mean_iters", "ops_logical", "ops_add", "ops_cmp_min", "ops_cmp_max"]

_INT_COLUMNS = {"frames", "ops_logical", "ops_add", "ops_cmp_min", "ops_cmp_max"}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_results(rows: list[SimResult], path: str, format: str = "csv") -> None:
    """Write sweep rows as CSV (header always present) or JSON."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            d = asdict(row)
            writer.writerow([_format_cell(d[c]) for c in CSV_COLUMNS])
        payload = buf.getvalue()
    elif format == "json":
        payload = json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    else:
        raise ConfigError(f"unknown output format {format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(payload)


def parse_results(path: str) -> list[SimResult]:
    """Read back a CSV written by :func:`emit_results`."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            kwargs = {}
            for col in CSV_COLUMNS:
                text = rec[col]
                if text == "":
                    kwargs[col] = None
                elif col in _INT_COLUMNS:
                    kwargs[col] = int(text)
                else:
                    kwargs[col] = float(text)
            rows.append(SimResult(**kwargs))
    return rows


def emit_complexity(rows: list[ComplexityRow], path: str) -> None:
    """Write a complexity report as CSV; inapplicable cells read 'x'."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["format", "demapper", "p", "frames",
                         "ops_logical", "ops_add", "ops_cmp_min", "ops_cmp_max"])
        for row in rows:
            if row.applicable:
                cells = [row.p if row.p is not None else "", row.frames,
                         row.ops_logical, row.ops_add, row.ops_cmp_min, row.ops_cmp_max]
            else:
                cells = ["", row.frames, "x", "x", "x", "x"]
            writer.writerow([row.format, row.demapper] + [str(c) for c in cells])


def dump_codebook(format_name: str, path: str) -> None:
    """Write a codebook as CSV plus a minimum-squared-distance summary."""
    spec = _load_format_checked(format_name)
    book = modem.build_codebook(spec)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["info_bits", "codeword"] + [f"a{i + 1}" for i in range(spec.n)])
        info = beq.all_info_words(spec.m)
        for bits, cw, sym in zip(info, book.codewords, book.symbols):
            writer.writerow(["".join(map(str, bits)), "".join(map(str, cw))]
                            + [repr(float(a)) for a in sym])
        fh.write(f"# min_squared_distance = {modem.min_squared_distance(book)!r}\n")
