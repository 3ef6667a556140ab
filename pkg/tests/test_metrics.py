"""SOD cost, satisfaction, fairness index, run summaries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamhop.metrics import (RunSummary, jfi, mean_sod, satisfaction,
                             satisfaction_vector, sod_cost, throughput)


def test_sod_cost_by_hand():
    assert sod_cost([3.0, 0.0], [1.0, 2.0]) == pytest.approx(8.0)
    assert sod_cost([1.0, 2.0], [1.0, 2.0]) == 0.0
    with pytest.raises(ValueError):
        sod_cost([1.0], [1.0, 2.0])


def test_satisfaction_conventions():
    assert satisfaction(50, 100) == 0.5
    assert satisfaction(0, 0) == 1.0
    with pytest.raises(ValueError):
        satisfaction(-1, 10)


def test_satisfaction_vector():
    out = satisfaction_vector([5.0, 0.0, 3.0], [10.0, 0.0, 3.0])
    assert np.allclose(out, [0.5, 1.0, 1.0])
    with pytest.raises(ValueError):
        satisfaction_vector([1.0], [1.0, 2.0])


def test_jfi_exact_values():
    assert jfi(np.full(12, 3.7)) == 1.0
    assert jfi([5.0, 0.0, 0.0, 0.0]) == 0.25
    assert jfi([1.0, 0.0, 0.0]) == pytest.approx(1.0 / 3.0, abs=0)


def test_jfi_rejects_degenerate_input():
    with pytest.raises(ValueError):
        jfi([])
    with pytest.raises(ValueError):
        jfi([1.0, -0.5])
    with pytest.raises(ValueError):
        jfi([0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=20),
       st.sampled_from([1e-6, 0.5, 3.0, 1e6]))
def test_jfi_scale_invariance(values, scale):
    x = np.asarray(values)
    if float(x @ x) == 0.0:
        return
    assert abs(jfi(x) - jfi(scale * x)) <= 1e-12


def test_jfi_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.uniform(0.01, 10.0, int(rng.integers(2, 15)))
        v = jfi(x)
        assert 1.0 / x.size - 1e-12 <= v <= 1.0 + 1e-12


def _summary(**kw) -> RunSummary:
    base = dict(algorithm="G-BH", slots=4, duration_s=2.0,
                total_arrived_bits=100, total_served_bits=60,
                per_position_demanded=np.array([40.0, 60.0]),
                per_position_served=np.array([20.0, 40.0]),
                sod_per_slot=np.array([4.0, 2.0, 0.0, 2.0]))
    base.update(kw)
    return RunSummary(**base)


def test_run_summary_derives_fairness():
    s = _summary()
    assert np.allclose(s.satisfactions, [0.5, 2.0 / 3.0])
    assert s.jfi == pytest.approx(jfi([0.5, 2.0 / 3.0]))
    assert throughput(s) == pytest.approx(30.0)
    assert mean_sod(s) == pytest.approx(2.0)


def test_run_summary_validation():
    with pytest.raises(ValueError):
        _summary(duration_s=0.0)


def test_mean_sod_without_trace():
    s = _summary(sod_per_slot=np.zeros(0))
    assert mean_sod(s) == 0.0
