"""Reference-guided block-wise ensemble fusion.

Every candidate restoration is cut into non-overlapping ``M x M`` blocks;
each block is scored by MS-SSIM against the matching block of the reference
and the best-scoring candidate's block is copied into the output.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DivisibilityError
from .image import as_image, check_same_shape
from .metrics import MetricReport, MsSsimParams, evaluate_pair, fmt_value, ms_ssim_batch

DEFAULT_BLOCK_SIZES = (4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class BlockGrid:
    block: int
    rows: int
    cols: int

    @property
    def n_blocks(self) -> int:
        return self.rows * self.cols

    def origin(self, r: int, c: int) -> tuple[int, int]:
        """Top-left pixel ``(y, x)`` of block ``(r, c)``."""
        return r * self.block, c * self.block


def partition(shape, block: int) -> BlockGrid:
    """Grid of ``block x block`` tiles covering an image of ``shape = (h, w)``."""
    h, w = shape
    if block < 1:
        raise ValueError(f"block size must be >= 1, got {block}")
    for name, dim in (("width", w), ("height", h)):
        if dim % block:
            raise DivisibilityError(f"image {name} {dim} is not divisible by block size {block}")
    return BlockGrid(block, h // block, w // block)


def to_blocks(img: np.ndarray, block: int) -> np.ndarray:
    """View ``(h, w)`` as ``(rows, cols, block, block)``."""
    h, w = img.shape
    return img.reshape(h // block, block, w // block, block).swapaxes(1, 2)


def from_blocks(blocks: np.ndarray) -> np.ndarray:
    rows, cols, m, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(rows * m, cols * m)


@dataclass(frozen=True)
class FusionResult:
    fused: np.ndarray
    winner_map: np.ndarray   # (rows, cols) candidate index
    block_scores: np.ndarray  # (rows, cols, n_candidates)
    block: int

    @property
    def n_candidates(self) -> int:
        return self.block_scores.shape[-1]

    @property
    def winning_scores(self) -> np.ndarray:
        return np.take_along_axis(self.block_scores, self.winner_map[..., None], axis=-1)[..., 0]

    def winner_dict(self) -> dict:
        rows, cols = self.winner_map.shape
        return {"block": self.block, "rows": rows, "cols": cols,
                "winners": [int(i) for i in self.winner_map.ravel()]}

    def winner_json(self) -> str:
        return json.dumps(self.winner_dict())

    def winner_image(self) -> np.ndarray:
        """Winner map at full resolution, index scaled to gray levels."""
        scale = max(self.n_candidates - 1, 1)
        tiles = np.repeat(np.repeat(self.winner_map, self.block, 0), self.block, 1)
        return tiles / scale


def score_blocks(gt, candidates, block: int, p: MsSsimParams | None = None) -> np.ndarray:
    """Per-block MS-SSIM of every candidate against ``gt``: ``(rows, cols, n)``."""
    ref = to_blocks(gt, block)
    return np.stack([ms_ssim_batch(ref, to_blocks(c, block), p) for c in candidates], axis=-1)


def _check_inputs(gt, candidates):
    gt = as_image(gt, "gt")
    if len(candidates) == 0:
        raise ValueError("at least one candidate image is required")
    cands = []
    for i, c in enumerate(candidates):
        c = as_image(c, f"candidate {i}")
        check_same_shape(gt, c, ("gt", f"candidate {i}"))
        cands.append(c)
    return gt, cands


def fuse(gt, candidates, block: int, p: MsSsimParams | None = None) -> FusionResult:
    """Fuse ``candidates`` block by block, keeping the best MS-SSIM block.

    Ties go to the lowest candidate index. Output pixels are copied from the
    winning candidate unchanged.
    """
    gt, cands = _check_inputs(gt, candidates)
    grid = partition(gt.shape, block)
    scores = score_blocks(gt, cands, block, p)
    winners = np.argmax(scores, axis=-1)  # first maximum wins ties
    stacked = np.stack([to_blocks(c, block) for c in cands])
    r, c = np.indices((grid.rows, grid.cols))
    fused = from_blocks(stacked[winners, r, c])
    for arr in (fused, winners, scores):
        arr.setflags(write=False)
    return FusionResult(fused, winners, scores, block)


def sweep(gt, candidates, sizes=DEFAULT_BLOCK_SIZES, p: MsSsimParams | None = None):
    """Fuse at each block size; returns ``[(size, MetricReport vs gt), ...]``."""
    return [(m, evaluate_pair(gt, fuse(gt, candidates, m, p).fused)) for m in sizes]


@dataclass(frozen=True)
class AggregateReport:
    """Field-wise mean and sample standard deviation over a dataset.

    Infinite PSNR values (perfect reconstructions) are left out of the PSNR
    mean/std and counted in ``psnr_excluded``; if every item is infinite the
    PSNR mean is reported as ``inf``.
    """

    mean: MetricReport
    std: MetricReport
    n: int
    psnr_excluded: int = 0

    def to_dict(self) -> dict:
        def enc(v):
            return fmt_value(v) if math.isinf(v) else v
        return {
            "mean": {k: enc(v) for k, v in self.mean.to_dict().items()},
            "std": {k: enc(v) for k, v in self.std.to_dict().items()},
            "n": self.n,
            "psnr_excluded": self.psnr_excluded,
        }


def aggregate_reports(reports) -> AggregateReport:
    if len(reports) == 0:
        raise ValueError("cannot aggregate an empty list of reports")
    names = MetricReport.field_names()
    cols = {k: np.array([getattr(r, k) for r in reports], dtype=np.float64) for k in names}
    means, stds = {}, {}
    excluded = 0
    for k, v in cols.items():
        if k == "psnr":
            finite = v[np.isfinite(v)]
            excluded = v.size - finite.size
            v = finite
        if v.size == 0:
            means[k], stds[k] = math.inf, 0.0
            continue
        means[k] = float(np.mean(v))
        stds[k] = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return AggregateReport(MetricReport(**means), MetricReport(**stds), len(reports), excluded)


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def batch_fuse(dataset, block: int, p: MsSsimParams | None = None, threads: int | None = None):
    """Fuse every ``(gt, candidates)`` item and aggregate fused-vs-gt metrics."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")

    def one(item):
        gt, cands = item
        return evaluate_pair(gt, fuse(gt, cands, block, p).fused)

    return aggregate_reports(_map(one, dataset, threads))


def sweep_dataset(dataset, sizes=DEFAULT_BLOCK_SIZES, p: MsSsimParams | None = None,
                  threads: int | None = None):
    """``batch_fuse`` at each block size: ``[(size, AggregateReport), ...]``."""
    return [(m, batch_fuse(dataset, m, p, threads)) for m in sizes]


# ---------------------------------------------------------------------------
# Sweep table CSV

def sweep_csv_header() -> list[str]:
    cols = ["block_size"]
    for k in MetricReport.field_names():
        cols += [k, f"{k}_std"]
    return cols


def format_sweep_csv(rows) -> str:
    """Render ``[(size, AggregateReport), ...]`` as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_csv_header())
    for size, agg in rows:
        line = [str(size)]
        for k in MetricReport.field_names():
            line += [fmt_value(getattr(agg.mean, k)), fmt_value(getattr(agg.std, k))]
        writer.writerow(line)
    return buf.getvalue()


def parse_sweep_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != sweep_csv_header():
        raise ValueError("unexpected sweep CSV header")
    return [{k: (int(v) if k == "block_size" else float(v)) for k, v in row.items()}
            for row in reader]
