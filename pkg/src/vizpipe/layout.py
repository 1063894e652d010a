"""Attribute ordering and pixel-grid layout.

Attributes are arranged in a linear order maximizing the sum of pairwise
association strengths over consecutive positions, so strongly related
attributes land next to each other. Expanded channels then wrap in raster
order onto the smallest square RGB grid (R, then G, then B of each pixel),
keeping every one-hot block contiguous across adjacent channels.

Small instances (n <= 9) are solved exactly with a bitmask dynamic program
over (subset, endpoint); larger ones use greedy endpoint extension refined
by 2-opt segment reversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from vizpipe.correlation import CorrelationMatrix
from vizpipe.encoding import EncoderModel
from vizpipe.errors import LengthMismatchError, PermutationError

EXACT_LIMIT = 9

# improvements below this are float noise for a [0,1]-valued objective
_MIN_GAIN = 1e-12
_MAX_SWEEPS = 1000


@dataclass(frozen=True)
class LayoutPlan:
    attribute_order: tuple[int, ...]
    grid_hw: tuple[int, int]
    # per encoder channel index -> (row, col, rgb) slot
    channel_slots: tuple[tuple[int, int, int], ...]
    padding_slots: tuple[tuple[int, int, int], ...]

    @property
    def num_channels(self) -> int:
        return len(self.channel_slots)

    @cached_property
    def _slot_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = np.array([s[0] for s in self.channel_slots], dtype=np.intp)
        cols = np.array([s[1] for s in self.channel_slots], dtype=np.intp)
        chans = np.array([s[2] for s in self.channel_slots], dtype=np.intp)
        return rows, cols, chans


@dataclass(frozen=True)
class ImageTensor:
    pixels: np.ndarray  # (H, W, 3) uint8
    label: int | None = None

    def __post_init__(self):
        self.pixels.setflags(write=False)


def _check_permutation(order, n: int) -> None:
    if len(order) != n or sorted(order) != list(range(n)):
        raise PermutationError(f"order is not a permutation of 0..{n - 1}")


def adjacency_score(order, m: CorrelationMatrix) -> float:
    """Sum of matrix entries over consecutive pairs of the order."""
    _check_permutation(order, m.size)
    total = 0.0
    for a, b in zip(order, order[1:]):
        total += float(m.values[a, b])
    return total


def order_attributes(m: CorrelationMatrix) -> tuple[int, ...]:
    """Deterministic high-adjacency order: exact for n <= 9, heuristic above."""
    n = m.size
    if n <= 1:
        return tuple(range(n))
    if n <= EXACT_LIMIT:
        return _exact_order(m.values, n)
    greedy = _greedy_order(m.values, n)
    candidates = [
        _two_opt(greedy, m.values),
        _two_opt(tuple(range(n)), m.values),
    ]
    scored = [(adjacency_score(c, m), c) for c in candidates]
    best_score = max(s for s, _ in scored)
    # tie -> lexicographically smallest order
    return min(c for s, c in scored if s == best_score)


def _exact_order(values: np.ndarray, n: int) -> tuple[int, ...]:
    """Exact maximizer via a (subset, endpoint) DP; lexicographically smallest
    optimal path is reconstructed with exact float comparisons against the
    same memoized sums the DP produced."""
    full = (1 << n) - 1
    # best[mask][e]: max score of a path visiting mask, starting (= ending) at e
    best = [[-math.inf] * n for _ in range(full + 1)]
    for v in range(n):
        best[1 << v][v] = 0.0
    masks_by_size: list[list[int]] = [[] for _ in range(n + 1)]
    for mask in range(1, full + 1):
        masks_by_size[mask.bit_count()].append(mask)
    for size in range(2, n + 1):
        for mask in masks_by_size[size]:
            row = best[mask]
            for e in range(n):
                if not mask & (1 << e):
                    continue
                rest = mask ^ (1 << e)
                b = -math.inf
                rest_row = best[rest]
                for u in range(n):
                    if rest & (1 << u):
                        cand = values[e, u] + rest_row[u]
                        if cand > b:
                            b = cand
                row[e] = b

    opt = max(best[full])
    start = min(v for v in range(n) if best[full][v] == opt)
    path = [start]
    mask = full ^ (1 << start)
    target = best[full][start]
    current = start
    while mask:
        for u in range(n):
            if mask & (1 << u) and values[current, u] + best[mask][u] == target:
                path.append(u)
                target = best[mask][u]
                mask ^= 1 << u
                current = u
                break
    return tuple(path)


def _greedy_order(values: np.ndarray, n: int) -> tuple[int, ...]:
    """Seed path from the strongest pair, then extend the better endpoint.

    Ties: smallest (i, j) pair, then smallest candidate index, tail end
    preferred over head.
    """
    bi, bj = 0, 1
    for i in range(n):
        for j in range(i + 1, n):
            if values[i, j] > values[bi, bj]:
                bi, bj = i, j
    path = [bi, bj]
    placed = {bi, bj}
    while len(path) < n:
        head, tail = path[0], path[-1]
        best_corr = -1.0
        best_u = -1
        best_end = "tail"
        for u in range(n):
            if u in placed:
                continue
            if values[tail, u] > best_corr:
                best_corr, best_u, best_end = values[tail, u], u, "tail"
            if values[head, u] > best_corr:
                best_corr, best_u, best_end = values[head, u], u, "head"
        if best_end == "tail":
            path.append(best_u)
        else:
            path.insert(0, best_u)
        placed.add(best_u)
    return tuple(path)


def _two_opt(order: tuple[int, ...], values: np.ndarray) -> tuple[int, ...]:
    """First-improvement segment reversal until a local optimum (or sweep cap)."""
    path = list(order)
    n = len(path)
    for _ in range(_MAX_SWEEPS):
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                if i == 0 and j == n - 1:
                    continue  # full reversal changes nothing
                removed = added = 0.0
                if i > 0:
                    removed += values[path[i - 1], path[i]]
                    added += values[path[i - 1], path[j]]
                if j < n - 1:
                    removed += values[path[j], path[j + 1]]
                    added += values[path[i], path[j + 1]]
                if added - removed > _MIN_GAIN:
                    path[i : j + 1] = reversed(path[i : j + 1])
                    improved = True
        if not improved:
            break
    return tuple(path)


def build_layout(m: EncoderModel, order) -> LayoutPlan:
    """Assign expanded channels, concatenated in attribute order, to grid slots."""
    n = len(m.encodings)
    _check_permutation(order, n)

    permuted: list[int] = []
    for a in order:
        offset = m.channel_offsets[a]
        width = (
            m.channel_offsets[a + 1] if a + 1 < n else m.num_channels
        ) - offset
        permuted.extend(range(offset, offset + width))

    channels = m.num_channels
    pixels = math.ceil(channels / 3)
    side = math.ceil(math.sqrt(pixels))
    grid = (side, side)

    def slot(pos: int) -> tuple[int, int, int]:
        pixel, chan = divmod(pos, 3)
        row, col = divmod(pixel, side)
        return (row, col, chan)

    slots: list[tuple[int, int, int] | None] = [None] * channels
    for pos, channel_index in enumerate(permuted):
        slots[channel_index] = slot(pos)
    padding = tuple(slot(p) for p in range(channels, side * side * 3))
    return LayoutPlan(tuple(order), grid, tuple(slots), padding)  # type: ignore[arg-type]


def render_record(cv: np.ndarray, plan: LayoutPlan, label: int | None = None) -> ImageTensor:
    """Write channel values into their slots; padding slots stay 0."""
    if len(cv) != plan.num_channels:
        raise LengthMismatchError(
            f"channel vector has {len(cv)} values, plan expects {plan.num_channels}"
        )
    h, w = plan.grid_hw
    img = np.zeros((h, w, 3), dtype=np.uint8)
    rows, cols, chans = plan._slot_arrays
    img[rows, cols, chans] = cv
    return ImageTensor(img, label)


def read_back(img: ImageTensor, plan: LayoutPlan) -> np.ndarray:
    """Inverse of render_record: recover the channel vector from the slots."""
    rows, cols, chans = plan._slot_arrays
    return img.pixels[rows, cols, chans].copy()
