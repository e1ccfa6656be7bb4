"""Adam with bias correction, checked against the textbook update rule."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minsurf.adam import AdamState, adam_step, init_adam
from minsurf.errors import ConfigurationError, NumericalError, StructuralError


def make_arrays(rng):
    return [rng.normal(size=(3, 2)), rng.normal(size=3)]


def test_init_state():
    st_ = init_adam(make_arrays(np.random.default_rng(0)), 0.01)
    assert st_.t == 0
    assert st_.learning_rate == 0.01
    assert st_.beta1 == 0.9 and st_.beta2 == 0.999 and st_.eps == 1e-8
    assert all(np.all(m == 0) for m in st_.m)
    assert all(np.all(v == 0) for v in st_.v)
    assert [m.shape for m in st_.m] == [(3, 2), (3,)]


@pytest.mark.parametrize("kwargs", [
    dict(learning_rate=0.0),
    dict(learning_rate=-1.0),
    dict(learning_rate=0.1, beta1=1.0),
    dict(learning_rate=0.1, beta2=-0.1),
    dict(learning_rate=0.1, eps=0.0),
])
def test_init_validation(kwargs):
    with pytest.raises(ConfigurationError):
        init_adam(make_arrays(np.random.default_rng(1)), **kwargs)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6),
       lr=st.floats(1e-4, 0.1),
       beta1=st.floats(0.0, 0.99),
       beta2=st.floats(0.9, 0.9999))
def test_matches_reference_update(seed, lr, beta1, beta2):
    rng = np.random.default_rng(seed)
    arrays = make_arrays(rng)
    state = init_adam(arrays, lr, beta1=beta1, beta2=beta2)
    mref = [np.zeros_like(a) for a in arrays]
    vref = [np.zeros_like(a) for a in arrays]
    cur = [a.copy() for a in arrays]
    for t in range(1, 4):
        grads = [rng.normal(size=a.shape) for a in arrays]
        stepped = adam_step(state, cur, grads)
        assert state.t == t
        for i in range(len(arrays)):
            mref[i] = beta1 * mref[i] + (1 - beta1) * grads[i]
            vref[i] = beta2 * vref[i] + (1 - beta2) * grads[i] ** 2
            mhat = mref[i] / (1 - beta1 ** t)
            vhat = vref[i] / (1 - beta2 ** t)
            expect = cur[i] - lr * mhat / (np.sqrt(vhat) + 1e-8)
            assert np.allclose(stepped[i], expect, atol=1e-14), (t, i)
        cur = stepped


def test_first_step_is_signed_learning_rate():
    # bias correction makes mhat = g and vhat = g^2 at t=1, so the update is
    # close to lr * sign(g) for gradients far above eps
    arrays = [np.array([10.0, -3.0, 0.5])]
    state = init_adam(arrays, 0.02)
    out = adam_step(state, arrays, [np.array([4.0, -2.0, 1.0])])
    assert np.allclose(out[0], arrays[0] - 0.02 * np.sign([4.0, -2.0, 1.0]),
                       atol=1e-7)


def test_inputs_not_mutated_state_is():
    rng = np.random.default_rng(2)
    arrays = make_arrays(rng)
    keep = [a.copy() for a in arrays]
    state = init_adam(arrays, 0.01)
    grads = [rng.normal(size=a.shape) for a in arrays]
    out = adam_step(state, arrays, grads)
    assert all(np.array_equal(a, k) for a, k in zip(arrays, keep))
    assert all(o is not a for o, a in zip(out, arrays))
    assert state.t == 1
    assert not all(np.all(m == 0) for m in state.m)


def test_nonfinite_gradient_rejected():
    rng = np.random.default_rng(3)
    arrays = make_arrays(rng)
    state = init_adam(arrays, 0.01)
    grads = [np.zeros((3, 2)), np.array([0.0, np.nan, 0.0])]
    with pytest.raises(NumericalError):
        adam_step(state, arrays, grads)


def test_count_mismatch_rejected():
    arrays = make_arrays(np.random.default_rng(4))
    state = init_adam(arrays, 0.01)
    with pytest.raises(StructuralError):
        adam_step(state, arrays, [np.zeros((3, 2))])
    with pytest.raises(StructuralError):
        adam_step(state, arrays[:1], [np.zeros((3, 2)), np.zeros(3)])
