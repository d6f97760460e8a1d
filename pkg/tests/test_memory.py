import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnc.errors import LabelError
from dnc.memory import FeatureMemory
from oracles import random_unit


def test_fifo_keeps_last_batches(rng):
    mem = FeatureMemory(2, 3, num_classes=2, dim=4)
    batches = [random_unit(rng, 3, 4) for _ in range(3)]
    for b in batches:
        mem.push_batch(b, [0, 1, 0])
    feats, labels, ages = mem.entries()
    assert np.array_equal(feats, np.concatenate(batches[1:]))
    assert ages.tolist() == [2, 2, 2, 3, 3, 3]


def test_zero_capacity_stays_empty(rng):
    mem = FeatureMemory(0, 4, 2, 3)
    mem.push_batch(random_unit(rng, 4, 3), [0, 1, 1, 0])
    assert len(mem) == 0
    cur = random_unit(rng, 3, 3)
    assert np.array_equal(mem.gather_class(cur, [1, 0, 1], 1), cur[[0, 2]])


def test_label_range_checked(rng):
    with pytest.raises(LabelError):
        FeatureMemory(1, 2, 2, 3).push_batch(random_unit(rng, 2, 3), [0, 2])


def test_gather_absent_class_is_empty(rng):
    mem = FeatureMemory(3, 2, 4, 3)
    mem.push_batch(random_unit(rng, 2, 3), [0, 1])
    assert mem.gather_class(random_unit(rng, 2, 3), [0, 0], 3).shape == (0, 3)


def test_gather_matches_replay_log(rng):
    mem = FeatureMemory(3, 5, 3, 4)
    log = []
    for _ in range(6):
        f, lab = random_unit(rng, 5, 4), rng.integers(0, 3, 5)
        mem.push_batch(f, lab)
        log.append((f, lab))
    cur, cur_lab = random_unit(rng, 5, 4), rng.integers(0, 3, 5)
    kept = log[-3:]
    for c in range(3):
        expect = [cur[i] for i in range(5) if cur_lab[i] == c]
        expect += [f[i] for f, lab in kept for i in range(5) if lab[i] == c]
        got = mem.gather_class(cur, cur_lab, c)
        assert np.array_equal(got, np.array(expect).reshape(-1, 4))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.integers(1, 6), st.lists(st.integers(1, 9), max_size=12), st.integers(0, 2**31))
def test_capacity_never_exceeded(cap, bs, sizes, seed):
    rng = np.random.default_rng(seed)
    mem = FeatureMemory(cap, bs, 3, 2)
    for n in sizes:
        mem.push_batch(random_unit(rng, n, 2), rng.integers(0, 3, n))
        assert len(mem) <= cap * bs
        for c in range(3):
            got = mem.gather_class(np.zeros((0, 2)), np.zeros(0, dtype=int), c)
            np.testing.assert_allclose(np.linalg.norm(got, axis=1), 1.0, atol=1e-12)
