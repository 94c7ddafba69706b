import numpy as np
import pytest

from app.exceptions import CongruenceError, DegenerateGroupError, NonFiniteValueError
from app.models.params import Origin, ParamGroup, ParamSet
from app.services.param_service import axpy, mean_of, param_std
from app.services.rng_service import derive_stream, member_label


def make_set(w, b):
    return ParamSet((
        ParamGroup("w", np.asarray(w, dtype=float), Origin.NEWLY_INITIALIZED),
        ParamGroup("b", np.asarray(b, dtype=float), Origin.PRETRAINED, trainable=False),
    ))


def test_tensors_are_read_only():
    params = make_set([[1.0, 2.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        params["w"].tensor[0, 0] = 3.0


def test_replace_returns_new_set_and_keeps_flags():
    params = make_set([[1.0, 2.0]], [0.5, 0.5])
    updated = params.replace({"w": np.array([[3.0, 4.0]])})
    assert params["w"].tensor.tolist() == [[1.0, 2.0]]
    assert updated["w"].tensor.tolist() == [[3.0, 4.0]]
    assert updated["b"].trainable is False
    assert updated.is_congruent(params)


def test_replace_unknown_group():
    with pytest.raises(KeyError):
        make_set([[1.0, 2.0]], [0.5, 0.5]).replace({"missing": np.zeros(2)})


def test_congruence_checks_shape_and_origin():
    a = make_set([[1.0, 2.0]], [0.5, 0.5])
    assert not a.is_congruent(make_set([[1.0, 2.0, 3.0]], [0.5, 0.5]))
    other_origin = ParamSet((
        ParamGroup("w", np.array([[1.0, 2.0]]), Origin.ADAPTER),
        ParamGroup("b", np.array([0.5, 0.5]), Origin.PRETRAINED),
    ))
    assert not a.is_congruent(other_origin)
    with pytest.raises(CongruenceError):
        a.require_congruent(other_origin)


def test_duplicate_names_rejected():
    with pytest.raises(CongruenceError):
        ParamSet((
            ParamGroup("w", np.zeros(2), Origin.PRETRAINED),
            ParamGroup("w", np.zeros(2), Origin.PRETRAINED),
        ))


def test_non_finite_values_rejected():
    with pytest.raises(NonFiniteValueError):
        ParamGroup("w", np.array([1.0, np.nan]), Origin.PRETRAINED)


def test_axpy_inverse_is_bitwise_for_dyadic_values():
    dst = make_set([[1.0, 2.0]], [0.5, 0.25])
    delta = make_set([[0.5, 0.25]], [0.125, 1.0])
    moved = axpy(dst, delta, 2.0)
    assert moved["w"].tensor.tolist() == [[2.0, 2.5]]
    assert axpy(moved, delta, -2.0).bitwise_equal(dst)


def test_axpy_requires_congruence():
    with pytest.raises(CongruenceError):
        axpy(make_set([[1.0, 2.0]], [0.5, 0.5]), make_set([[1.0]], [0.5, 0.5]), 1.0)


def test_mean_is_permutation_invariant():
    rng = derive_stream(3, "test")
    members = [make_set(rng.normal(1.0, (4, 5)), rng.normal(1.0, 2)) for _ in range(5)]
    forward = mean_of(members)
    backward = mean_of(list(reversed(members)))
    shuffled = mean_of([members[i] for i in (2, 4, 0, 3, 1)])
    assert forward.bitwise_equal(backward)
    assert forward.bitwise_equal(shuffled)
    np.testing.assert_allclose(
        forward["w"].tensor, np.mean([m["w"].tensor for m in members], axis=0), rtol=1e-12
    )


def test_param_std_is_population_std():
    group = ParamGroup("w", np.array([1.0, 2.0, 3.0, 4.0]), Origin.NEWLY_INITIALIZED)
    assert param_std(group) == pytest.approx(np.sqrt(1.25))


def test_param_std_needs_two_elements():
    with pytest.raises(DegenerateGroupError):
        param_std(ParamGroup("w", np.array([1.0]), Origin.NEWLY_INITIALIZED))


def test_streams_are_reproducible_and_independent():
    a = derive_stream(1, "init").normal(1.0, 5)
    b = derive_stream(1, "init").normal(1.0, 5)
    c = derive_stream(1, "data_order").normal(1.0, 5)
    d = derive_stream(2, "init").normal(1.0, 5)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()
    assert a.tobytes() != d.tobytes()


def test_member_labels():
    assert member_label("init", 0) == "init"
    assert member_label("init", None) == "init"
    assert member_label("init", 3) == "init:member:3"


def test_empty_label_rejected():
    with pytest.raises(ValueError):
        derive_stream(0, "")
