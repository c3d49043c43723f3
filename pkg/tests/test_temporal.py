import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtenn import autodiff as ad
from gtenn.autodiff import Matrix, Parameter
from gtenn.errors import ShapeError
from gtenn.temporal import TemporalGru, gru_cell, temporal_forward

from oracles import scalar_gru_cell


def make(rng, d_in=3, d_h=3, scale=1.0):
    p = TemporalGru.init(rng, d_in, d_h)
    for q in p.parameters():
        q.assign(rng.normal(scale=scale, size=q.shape))
    return p


def test_zero_fixed_point(rng):
    p = TemporalGru.init(rng, 3, 2)
    for q in p.parameters():
        q.assign(np.zeros(q.shape))
    h = gru_cell(Matrix(rng.normal(size=(4, 3))), Matrix(np.zeros((4, 2))), p)
    np.testing.assert_array_equal(h.value, 0.0)


def test_closed_update_gate_keeps_state(rng):
    p = make(rng)
    p.B_z.assign(np.full((1, 3), -60.0))
    h_prev = rng.normal(size=(5, 3))
    h = gru_cell(Matrix(rng.normal(size=(5, 3)) * 10), Matrix(h_prev), p)
    np.testing.assert_allclose(h.value, h_prev, atol=1e-12)


def test_matches_scalar_recomputation(rng):
    p = make(rng)
    x = rng.normal(size=(4, 3))
    h_prev = rng.normal(size=(4, 3))
    out = gru_cell(Matrix(x), Matrix(h_prev), p).value
    params = {name: getattr(p, name).value.tolist() for name in ("W_r", "W_z", "W_h", "U_r", "U_z", "U_h", "B_r", "B_z", "B_h")}
    for i in range(4):
        ref = scalar_gru_cell(x[i].tolist(), h_prev[i].tolist(), params)
        np.testing.assert_allclose(out[i], ref, atol=1e-9, rtol=0)


def test_single_step_sequence(rng):
    p = make(rng)
    f = Matrix(rng.normal(size=(4, 3)))
    (h,) = temporal_forward([f], p)
    np.testing.assert_array_equal(h.value, gru_cell(f, Matrix(np.zeros((4, 3))), p).value)


def test_closed_gate_sequence_stays_at_zero(rng):
    p = make(rng)
    p.B_z.assign(np.full((1, 3), -60.0))
    f = Matrix(rng.normal(size=(4, 3)))
    for h in temporal_forward([f] * 4, p):
        np.testing.assert_allclose(h.value, 0.0, atol=1e-20)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.permutations(range(5)))
def test_rows_evolve_independently(seed, perm):
    rng = np.random.default_rng(seed)
    perm = np.array(perm)
    p = make(rng)
    seq = [rng.normal(size=(5, 3)) for _ in range(3)]
    hs = temporal_forward([Matrix(f) for f in seq], p)
    hs_p = temporal_forward([Matrix(f[perm]) for f in seq], p)
    for a, b in zip(hs, hs_p):
        np.testing.assert_allclose(b.value, a.value[perm], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_hidden_state_stays_in_unit_box(seed):
    rng = np.random.default_rng(seed)
    p = make(rng, scale=3.0)
    for h in temporal_forward([Matrix(rng.normal(scale=20, size=(4, 3))) for _ in range(5)], p):
        assert np.all(np.abs(h.value) <= 1.0)


def test_three_step_gradients(rng):
    p = make(rng, scale=0.5)
    seq = [Parameter(rng.normal(size=(4, 3))) for _ in range(3)]

    def loss():
        hs = temporal_forward(seq, p)
        return ad.sum_(hs[0] * hs[2]) + ad.sum_(hs[1])

    assert ad.grad_check(loss, [*seq, *p.parameters()]) < 1e-4


def test_shape_errors(rng):
    p = make(rng)
    with pytest.raises(ShapeError):
        gru_cell(Matrix(np.ones((4, 2))), Matrix(np.zeros((4, 3))), p)
    with pytest.raises(ShapeError):
        temporal_forward([Matrix(np.ones((4, 3))), Matrix(np.ones((5, 3)))], p)
    assert temporal_forward([], p) == []


def test_default_update_bias_favours_new_input(rng):
    p = TemporalGru.init(rng, 3, 2)
    np.testing.assert_array_equal(p.B_z.value, 2.0)
    np.testing.assert_array_equal(p.B_r.value, 0.0)
    np.testing.assert_array_equal(p.B_h.value, 0.0)
