import itertools
import math

import numpy as np
import pytest

from vizpipe.correlation import CorrelationMatrix
from vizpipe.dataset import Attribute, AttributeSchema
from vizpipe.encoding import fit_encoder
from vizpipe.errors import LengthMismatchError, PermutationError
from vizpipe.layout import (
    adjacency_score,
    build_layout,
    order_attributes,
    read_back,
    render_record,
)

from conftest import make_dataset


def random_matrix(rng: np.random.Generator, n: int) -> CorrelationMatrix:
    values = rng.uniform(0.0, 1.0, size=(n, n))
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(tuple(f"a{i}" for i in range(n)), values)


def brute_force_best(m: CorrelationMatrix):
    """Enumerate all permutations; returns (best score, first maximizer in lex order)."""
    best_score, best_perm = -math.inf, None
    for perm in itertools.permutations(range(m.size)):
        score = sum(m.values[perm[i], perm[i + 1]] for i in range(m.size - 1))
        if score > best_score:
            best_score, best_perm = score, perm
    return best_score, best_perm


def matrix_from(names, entries) -> CorrelationMatrix:
    n = len(names)
    values = np.eye(n)
    for (i, j), v in entries.items():
        values[i, j] = values[j, i] = v
    return CorrelationMatrix(tuple(names), values)


def test_adjacency_score_single_attribute():
    m = matrix_from(["a"], {})
    assert adjacency_score((0,), m) == 0.0


def test_adjacency_score_two_term_sum():
    m = matrix_from("abc", {(0, 1): 0.9, (1, 2): 0.8, (0, 2): 0.1})
    assert adjacency_score((0, 1, 2), m) == pytest.approx(1.7, abs=1e-12)


def test_adjacency_score_random_matches_naive_resum():
    rng = np.random.default_rng(1)
    m = random_matrix(rng, 6)
    order = tuple(rng.permutation(6))
    naive = sum(float(m.values[order[i], order[i + 1]]) for i in range(5))
    assert adjacency_score(order, m) == pytest.approx(naive, abs=1e-12)


def test_adjacency_score_rejects_non_permutation():
    m = matrix_from("abc", {})
    with pytest.raises(PermutationError):
        adjacency_score((0, 1, 1), m)
    with pytest.raises(PermutationError):
        adjacency_score((0, 1), m)


def test_order_three_attribute_example():
    m = matrix_from("abc", {(0, 1): 0.9, (1, 2): 0.8, (0, 2): 0.1})
    order = order_attributes(m)
    assert order in ((0, 1, 2), (2, 1, 0))
    assert adjacency_score(order, m) == pytest.approx(1.7, abs=1e-12)
    assert adjacency_score(order, m) == pytest.approx(brute_force_best(m)[0], abs=1e-12)


def test_order_all_equal_gives_identity():
    n = 6
    values = np.full((n, n), 0.5)
    np.fill_diagonal(values, 1.0)
    m = CorrelationMatrix(tuple(f"a{i}" for i in range(n)), values)
    assert order_attributes(m) == tuple(range(n))


def test_order_all_equal_heuristic_range_gives_identity():
    n = 12  # above the exact-solver limit
    values = np.full((n, n), 0.5)
    np.fill_diagonal(values, 1.0)
    m = CorrelationMatrix(tuple(f"a{i}" for i in range(n)), values)
    assert order_attributes(m) == tuple(range(n))


def test_order_exact_matches_brute_force_scores():
    rng = np.random.default_rng(100)
    for n in range(2, 9):
        m = random_matrix(rng, n)
        order = order_attributes(m)
        best_score, best_perm = brute_force_best(m)
        assert adjacency_score(order, m) == pytest.approx(best_score, abs=1e-12)
        if n <= 7:
            # the exact solver picks the lexicographically smallest optimum,
            # which is also the first maximizer in enumeration order
            assert order == best_perm


def test_order_heuristic_beats_identity_and_random():
    rng = np.random.default_rng(200)
    for n in (10, 14, 20):
        m = random_matrix(rng, n)
        order = order_attributes(m)
        assert sorted(order) == list(range(n))
        score = adjacency_score(order, m)
        assert score >= adjacency_score(tuple(range(n)), m) - 1e-12
        random_scores = [
            adjacency_score(tuple(rng.permutation(n)), m) for _ in range(300)
        ]
        assert score >= float(np.mean(random_scores))


def test_order_deterministic():
    rng = np.random.default_rng(7)
    m = random_matrix(rng, 11)
    assert order_attributes(m) == order_attributes(m)


def _encoder(n_scalar: int, cats: tuple[int, ...] = ()):
    attrs = [Attribute(f"n{i}", "numeric") for i in range(n_scalar)]
    rows_n = [[float(i + j) for j in range(n_scalar)] for i in range(3)]
    rows = rows_n
    for k, size in enumerate(cats):
        attrs.append(Attribute(f"c{k}", "categorical"))
        for i, row in enumerate(rows):
            row.append(f"v{i % size}")
    # ensure every category appears
    for k, size in enumerate(cats):
        while len(rows) < size:
            rows.append([float(len(rows) + j) for j in range(n_scalar)] +
                        [f"v{len(rows) % s}" for s in cats])
    schema = AttributeSchema(tuple(attrs), "class", ("p", "q"))
    return fit_encoder(make_dataset(schema, rows))


def test_build_layout_exact_fit_three_channels():
    m = _encoder(3)
    plan = build_layout(m, (0, 1, 2))
    assert plan.grid_hw == (1, 1)
    assert plan.channel_slots == ((0, 0, 0), (0, 0, 1), (0, 0, 2))
    assert plan.padding_slots == ()


def test_build_layout_four_channels_padding():
    m = _encoder(4)
    plan = build_layout(m, (0, 1, 2, 3))
    assert plan.grid_hw == (2, 2)  # ceil(sqrt(ceil(4/3))) = 2
    assert len(plan.padding_slots) == 2 * 2 * 3 - 4


def test_build_layout_follows_attribute_order():
    m = _encoder(3)
    plan = build_layout(m, (2, 0, 1))
    # channel of attribute 2 sits in the first slot
    assert plan.channel_slots[2] == (0, 0, 0)
    assert plan.channel_slots[0] == (0, 0, 1)
    assert plan.channel_slots[1] == (0, 0, 2)


def test_build_layout_one_hot_blocks_contiguous():
    m = _encoder(2, cats=(3,))  # channels: n0, n1, c0 block of 3
    order = (2, 0, 1)
    plan = build_layout(m, order)

    def position(slot):
        row, col, chan = slot
        w = plan.grid_hw[1]
        return (row * w + col) * 3 + chan

    block = [position(plan.channel_slots[i]) for i in (2, 3, 4)]
    assert block == [0, 1, 2]  # contiguous raster-RGB positions


def test_build_layout_grid_formula_from_channel_count():
    m = _encoder(5, cats=(4, 3))  # 5 + 4 + 3 = 12 channels
    assert m.num_channels == 12
    plan = build_layout(m, tuple(range(7)))
    pixels = math.ceil(12 / 3)
    side = math.ceil(math.sqrt(pixels))
    assert plan.grid_hw == (side, side)
    occupied = set(plan.channel_slots)
    assert len(occupied) == 12  # injective
    assert occupied.isdisjoint(plan.padding_slots)
    assert len(occupied) + len(plan.padding_slots) == side * side * 3


def test_render_all_zero():
    m = _encoder(4)
    plan = build_layout(m, (0, 1, 2, 3))
    img = render_record(np.zeros(4, dtype=np.uint8), plan)
    assert not img.pixels.any()


def test_render_single_red_pixel():
    m = _encoder(3)
    plan = build_layout(m, (0, 1, 2))
    img = render_record(np.array([255, 0, 0], dtype=np.uint8), plan)
    assert img.pixels.shape == (1, 1, 3)
    assert list(img.pixels[0, 0]) == [255, 0, 0]


def test_render_read_back_round_trip():
    rng = np.random.default_rng(3)
    m = _encoder(5, cats=(4, 3))
    plan = build_layout(m, tuple(rng.permutation(7)))
    for _ in range(20):
        cv = rng.integers(0, 256, size=12).astype(np.uint8)
        img = render_record(cv, plan)
        assert np.array_equal(read_back(img, plan), cv)


def test_render_length_mismatch():
    m = _encoder(3)
    plan = build_layout(m, (0, 1, 2))
    with pytest.raises(LengthMismatchError):
        render_record(np.zeros(5, dtype=np.uint8), plan)


def test_render_deterministic_bytes():
    m = _encoder(4)
    plan = build_layout(m, (3, 1, 0, 2))
    cv = np.array([7, 99, 255, 0], dtype=np.uint8)
    a = render_record(cv, plan).pixels.tobytes()
    b = render_record(cv, plan).pixels.tobytes()
    assert a == b
