import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankga.core import FitnessLandscape, Population, popcount
from rankga.engine import (
    GAConfig,
    TraceSpec,
    catastrophe_flags,
    coupled_run,
    draw_block,
    draw_blocks,
    observe_catastrophe,
    run,
    step,
    step_many,
)
from rankga.engine.dynamics import RandomBlock, select_parents, step_packed
from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme


def make_config(length=8, m=6, scheme=None, p_C=0.5, p_M=0.05, landscape=None, **kw):
    scheme = scheme or SelectionScheme.tournament(2)
    landscape = landscape or FitnessLandscape.one_max(length)
    return GAConfig(length, m, scheme, p_C, p_M, landscape, **kw)


def test_config_validation_and_pi():
    c = make_config(length=10, m=4, p_C=0.2, p_M=0.1)
    assert c.pi == pytest.approx(2 * 0.8 * 0.9**10)
    with pytest.raises(InvalidArgument):
        make_config(m=5)
    with pytest.raises(InvalidArgument):
        make_config(p_M=1.5)
    with pytest.raises(InvalidArgument):
        make_config(length=8, landscape=FitnessLandscape.one_max(9))
    assert make_config(m=8).replace(m=10).m == 10


def test_block_shapes_and_moments():
    c = make_config(length=5, m=1000, p_C=0.3, p_M=0.2)
    b = draw_block(c, np.random.default_rng(0))
    b.check(1000, 5)
    assert b.S.min() >= 0 and b.S.max() < 1
    assert set(np.unique(b.W)) <= set(range(1, 5))
    assert abs(b.V.mean() - 0.3) < 0.07
    assert abs(b.U.mean() - 0.2) < 0.02
    with pytest.raises(InvalidArgument):
        b.check(10, 5)


def test_zero_noise_step_is_pure_selection():
    c = make_config(length=4, m=4, p_C=0.0, p_M=0.0,
                    landscape=FitnessLandscape.sharp_peak(4))
    x = Population.from_strings(["1111", "0000", "0011", "0101"])
    block = draw_block(c, np.random.default_rng(3))
    y = step(x, block, c)
    fit = c.landscape.fitness(x)
    parents = select_parents(fit, block, c.cumulative)
    assert y.to_lines() == [x.to_lines()[p] for p in parents]


def test_top_rank_selection_copies_best():
    # S close to 1 selects the best rank for any scheme
    c = make_config(length=4, m=4, p_C=0.0, p_M=0.0)
    x = Population.from_strings(["0001", "0111", "0011", "0000"])
    block = RandomBlock(np.full(4, 0.999999), np.zeros(2, bool), np.ones(2, int),
                        np.zeros((4, 4), bool), np.arange(4.0))
    assert step(x, block, c).to_lines() == ["0111"] * 4


def test_all_flip_mask_complements_children():
    c = make_config(length=6, m=2, p_C=0.0, p_M=0.0)
    x = Population.from_strings(["110000", "110000"])
    block = RandomBlock(np.array([0.1, 0.9]), np.zeros(1, bool), np.ones(1, int),
                        np.ones((2, 6), bool), np.zeros(2))
    assert step(x, block, c).to_lines() == ["001111", "001111"]


def test_run_is_deterministic_and_records():
    c = make_config(length=12, m=10, horizon=40, seed=7)
    x0 = Population.master_over_zeros(10, 12)
    spec = TraceSpec(rhos=(0.5,), lambdas=(6.0,), genealogy=True, catastrophe_rho=0.5)
    t1 = run(c, x0, spec=spec)
    t2 = run(c, x0, spec=spec)
    assert [r.row() for r in t1] == [r.row() for r in t2]
    assert len(t1) == 41 and t1[0].generation == 0
    assert t1[0].best == 12.0 and t1[0].T == 1 and t1[0].N_star == 1
    assert all(0 <= r.counts[0] <= 10 for r in t1)


def test_observers_see_every_generation():
    c = make_config(horizon=5)
    seen = []
    run(c, Population.master_over_zeros(6, 8), observers=[lambda n, x: seen.append((n, x.m))])
    assert seen == [(n, 6) for n in range(6)]


def test_coupled_identical_starts_agree():
    c = make_config(horizon=20)
    x0 = Population.master_over_zeros(6, 8)
    a, b = coupled_run(c, [x0, x0])
    assert [r.row() for r in a] == [r.row() for r in b]


def test_observe_catastrophe_examples():
    flags = observe_catastrophe([5, 5, 3, 6, 4], [2, 5, 1, 4, 4])
    assert flags.tolist() == [False, False, True, False, True]


def test_catastrophe_flags_from_trace():
    c = make_config(length=10, m=8, p_M=0.2, horizon=30, seed=1,
                    landscape=FitnessLandscape.sharp_peak(10))
    x0 = Population.from_strings(["1" * 10] * 8)
    tr = run(c, x0, spec=TraceSpec(rhos=(0.5,), catastrophe_rho=0.5))
    assert catastrophe_flags(tr).tolist() == [r.catastrophe for r in tr]


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3, 9]), st.sampled_from([2, 4, 6]))
def test_step_many_matches_single_steps(seed, length, m):
    c = make_config(length=length, m=m, p_C=0.6, p_M=0.1,
                    scheme=SelectionScheme.linear_ranking(1.5))
    rng = np.random.default_rng(seed)
    K = 5
    pops = [Population.from_bits(rng.integers(0, 2, (m, length))) for _ in range(K)]
    packed = np.stack([p.packed for p in pops])
    fit = np.stack([c.landscape.evaluate_packed(p.packed) for p in pops])
    blocks = draw_blocks(c, K, rng)
    out = step_many(packed, fit, blocks, c)
    for k in range(K):
        bk = RandomBlock(blocks.S[k], blocks.V[k], blocks.W[k], blocks.U[k], blocks.R[k])
        ref, _ = step_packed(pops[k].packed, fit[k], bk, c)
        assert np.array_equal(out[k], ref)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_genealogy_invariants(seed):
    c = make_config(length=6, m=8, p_C=0.7, p_M=0.05, horizon=15, seed=seed,
                    landscape=FitnessLandscape.sharp_peak(6))
    tr = run(c, Population.master_over_zeros(8, 6), spec=TraceSpec(genealogy=True))
    for prev, cur in zip(tr, tr[1:]):
        assert 0 <= cur.T <= 8
        assert cur.T % 2 == 0
        if prev.T == 0:
            assert cur.T == 0


def test_population_shape_checks():
    c = make_config()
    with pytest.raises(InvalidArgument):
        run(c, Population.master_over_zeros(4, 8))
    with pytest.raises(InvalidArgument):
        step(Population.master_over_zeros(6, 7), draw_block(c, np.random.default_rng(0)), c)
