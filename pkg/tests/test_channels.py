import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ic_lab.channels import (
    DiscreteChannel,
    channel_capacity,
    closed_form_capacity,
    identity_channel,
    iterative_capacity,
    load_channel,
    symmetric_channel,
)
from ic_lab.errors import ConvergenceError, DomainError, ValidationError
from oracles import binary_capacity_grid, h


def test_symmetric_channel_extremes():
    np.testing.assert_array_equal(symmetric_channel(2, 1.0).transition, np.eye(2))
    np.testing.assert_allclose(symmetric_channel(2, 0.0).transition, 0.5)


def test_symmetric_channel_table1_d3():
    r = symmetric_channel(3, 0.295).transition
    assert r[0, 0] == pytest.approx((1 + 2 * 0.295) / 3)
    assert r[0, 0] == pytest.approx(0.530, abs=1e-3)
    assert r[0, 1] == pytest.approx(0.235, abs=1e-3)
    np.testing.assert_allclose(r.sum(axis=1), 1.0, atol=1e-15)


@pytest.mark.parametrize("d,e_c", [(1, 0.5), (2, -0.2), (3, 1.5)])
def test_symmetric_channel_domain(d, e_c):
    with pytest.raises(DomainError):
        symmetric_channel(d, e_c)


def test_rectangular_channel_rejected():
    with pytest.raises(ValidationError):
        DiscreteChannel([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])


def test_bad_rows_rejected():
    with pytest.raises(ValidationError):
        DiscreteChannel([[0.5, 0.4], [0.0, 1.0]])


def test_closed_form_values():
    assert closed_form_capacity(2, 1.0) == pytest.approx(1.0)
    assert closed_form_capacity(5, 0.0) == 0.0
    for e_c in (0.1, 0.4, 0.8):
        assert closed_form_capacity(2, e_c) == pytest.approx(1 - h((1 + e_c) / 2), abs=1e-14)


def test_iterative_matches_closed_form_bsc():
    res = iterative_capacity(symmetric_channel(2, 0.6), tol=1e-12)
    assert res.capacity == pytest.approx(closed_form_capacity(2, 0.6), abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 7])
def test_identity_capacity(d):
    assert iterative_capacity(identity_channel(d)).capacity == pytest.approx(np.log2(d), abs=1e-12)


def test_z_channel_against_grid_oracle():
    r = [[1.0, 0.0], [0.5, 0.5]]
    res = iterative_capacity(DiscreteChannel(r), tol=1e-12)
    grid = binary_capacity_grid(r, step=1e-4)
    assert res.capacity >= grid - 1e-12
    assert res.capacity - grid < 1e-7
    assert res.capacity == pytest.approx(np.log2(5 / 4), abs=1e-11)
    np.testing.assert_allclose(res.input_distribution, [0.6, 0.4], atol=1e-5)


def test_nonconvergence_carries_best_iterate():
    ch = DiscreteChannel([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ConvergenceError) as info:
        iterative_capacity(ch, tol=1e-14, max_iter=3)
    assert info.value.best is not None
    assert 0 < info.value.best.capacity <= np.log2(5 / 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_symmetric_capacity_from_random_start(d, e_c, seed):
    start = np.random.default_rng(seed).dirichlet(np.ones(d)) * 0.9 + 0.1 / d
    res = iterative_capacity(symmetric_channel(d, e_c), tol=1e-11, initial=start)
    assert res.capacity == pytest.approx(closed_form_capacity(d, e_c), abs=1e-8)
    if e_c >= 1e-2:
        np.testing.assert_allclose(res.input_distribution, 1.0 / d, atol=1e-6)


def test_weak_channel_converges():
    # plain updates would need millions of iterations here
    start = np.array([0.9, 0.1])
    res = iterative_capacity(symmetric_channel(2, 1e-3), tol=1e-13, initial=start)
    assert res.iterations < 2000
    assert res.capacity == pytest.approx(closed_form_capacity(2, 1e-3), abs=1e-13)


@pytest.mark.parametrize("d", [2, 3, 6])
def test_capacity_monotone_in_bias(d):
    values = [closed_form_capacity(d, e) for e in np.linspace(0, 1, 501)]
    assert np.all(np.diff(values) >= 0)


def test_dispatch_uses_closed_form_only_for_symmetric():
    assert symmetric_channel(4, 0.3).symmetric_bias() == pytest.approx(0.3)
    assert DiscreteChannel([[1.0, 0.0], [0.5, 0.5]]).symmetric_bias() is None
    assert channel_capacity(DiscreteChannel([[1.0, 0.0], [0.5, 0.5]])) == pytest.approx(np.log2(5 / 4), abs=1e-9)


def test_json_roundtrip(tmp_path):
    ch = symmetric_channel(3, 0.4)
    path = tmp_path / "ch.json"
    path.write_text(json.dumps(ch.to_dict()))
    np.testing.assert_allclose(load_channel(path).transition, ch.transition)


def test_json_shape_mismatch(tmp_path):
    path = tmp_path / "ch.json"
    path.write_text(json.dumps({"d": 3, "transition": [[1, 0], [0, 1]]}))
    with pytest.raises(ValidationError, match="channel.transition"):
        load_channel(path)
