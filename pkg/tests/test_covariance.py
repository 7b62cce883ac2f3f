import math

import numpy as np
import pytest
from hypothesis import given, settings

from gpcompare.covariance import (
    ProcessSpec,
    SpecError,
    augment_with_zero,
    build_from_kernel,
    hat_paths,
    hatted_system,
    increment_matrix,
)

from conftest import specs

NEG_INF = float("-inf")


def test_brownian_kernel():
    spec = build_from_kernel({"type": "brownian"}, [1, 2], [0, 0])
    np.testing.assert_array_equal(spec.sigma, [[1, 1], [1, 2]])
    assert spec.labels == ("1", "2")


def test_scaled_identity_kernel():
    spec = build_from_kernel({"type": "scaled_identity", "a": 1}, None, [0, 0, 0])
    np.testing.assert_array_equal(spec.sigma, np.eye(3))


def test_ou_kernel():
    spec = build_from_kernel({"type": "ou", "scale": 1}, [0, 1], [0, 0])
    e = math.exp(-1)
    np.testing.assert_allclose(spec.sigma, [[1, e], [e, 1]], rtol=0, atol=1e-15)


def test_sum_kernel_adds_matrices():
    k = {"type": "sum", "terms": [{"type": "brownian"}, {"type": "scaled_identity", "a": 0.5}]}
    spec = build_from_kernel(k, [1, 2], [0, 0])
    np.testing.assert_array_equal(spec.sigma, [[1.5, 1], [1, 2.5]])


@pytest.mark.parametrize(
    "kernel, grid, shifts",
    [
        ({"type": "explicit", "matrix": [[1, 2], [2, 1]]}, None, [0, 0]),
        ({"type": "brownian"}, [2, 1], [0, 0]),
        ({"type": "brownian"}, [1, 1], [0, 0]),
        ({"type": "explicit", "matrix": [[1, 0], [0, 1]]}, None, [0, 0, 0]),
        ({"type": "ou", "scale": 0}, [0, 1], [0, 0]),
        ({"type": "nope"}, [0, 1], [0, 0]),
    ],
)
def test_kernel_errors(kernel, grid, shifts):
    with pytest.raises(SpecError):
        build_from_kernel(kernel, grid, shifts)


def test_spec_validation():
    with pytest.raises(SpecError):
        ProcessSpec(("a", "a"), np.eye(2), [0, 0])
    with pytest.raises(SpecError):
        ProcessSpec(("a", "b"), [[1, 0.5], [0.4, 1]], [0, 0])
    with pytest.raises(SpecError):
        ProcessSpec(("a", "b"), np.eye(2), [NEG_INF, NEG_INF])
    with pytest.raises(SpecError):
        ProcessSpec(("a",), [[1]], [float("inf")])
    # tiny negative eigenvalue from rounding is tolerated
    ProcessSpec(("a", "b"), [[1, 1], [1, 1 - 1e-14]], [0, 0])


def test_spec_is_immutable():
    spec = ProcessSpec(("a",), [[1.0]], [0.0])
    with pytest.raises(ValueError):
        spec.sigma[0, 0] = 2.0


@pytest.mark.parametrize(
    "sigma, expected",
    [
        ([[1, 0], [0, 1]], [[0, 2], [2, 0]]),
        ([[1, 0.5], [0.5, 1]], [[0, 1], [1, 0]]),
        ([[1, 1], [1, 2]], [[0, 1], [1, 0]]),
    ],
)
def test_increment_matrix_examples(sigma, expected):
    d = increment_matrix(ProcessSpec(("a", "b"), sigma, [0, 0])).d
    np.testing.assert_array_equal(d, expected)


def test_augment_with_zero():
    aug = augment_with_zero(ProcessSpec(("1",), [[1.0]], [0.7]))
    np.testing.assert_array_equal(aug.sigma, [[0, 0], [0, 1]])
    assert aug.shifts[0] == NEG_INF and aug.shifts[1] == 0.7
    assert aug.labels == ("0", "1")


def test_augmented_increment_row_is_variance():
    aug = augment_with_zero(ProcessSpec(("1", "2"), [[1, 0.5], [0.5, 2]], [0, 0]))
    d = increment_matrix(aug).d
    assert d[0, 1] == 1 and d[0, 2] == 2


def test_augment_rejects_reserved_label():
    with pytest.raises(SpecError):
        augment_with_zero(ProcessSpec(("0", "1"), np.eye(2), [0, 0]))


def test_hatted_system_example():
    spec = ProcessSpec(("1", "2"), np.eye(2), [1, 3])
    hat = hatted_system(spec, "2", 0.0)
    np.testing.assert_array_equal(hat.sigma, [[2, 0], [0, 0]])
    # off-anchor: m_i - m_k; anchor: max(m, m_k) - m_k
    np.testing.assert_array_equal(hat.shifts, [-2, 0])


def test_hatted_system_fixed_point():
    spec = ProcessSpec(("a", "b"), [[2, 0], [0, 0]], [0.3, 0])
    hat = hatted_system(spec, "b", NEG_INF)
    assert hat == spec


def test_hatted_system_requires_finite_anchor_shift():
    spec = ProcessSpec(("a", "b"), np.eye(2), [0, NEG_INF])
    with pytest.raises(SpecError):
        hatted_system(spec, "b", 0.0)


def test_hat_paths():
    x = np.array([[0.3, -1.2, 2.0]])
    np.testing.assert_array_equal(hat_paths(x, 1), [[1.5, 0.0, 3.2]])


@settings(max_examples=100, deadline=None)
@given(specs(max_n=7))
def test_increment_matrix_is_squared_pseudometric(spec):
    d = increment_matrix(spec).d
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0) and np.all(d >= 0)
    r = np.sqrt(d)
    n = spec.n
    for k in range(n):
        assert np.all(r <= r[:, [k]] + r[[k], :] + 1e-9)


@settings(max_examples=100, deadline=None)
@given(specs(max_n=6))
def test_hatting_preserves_increments(spec):
    d = increment_matrix(spec).d
    for k in range(spec.n):
        dh = increment_matrix(hatted_system(spec, k, 0.0)).d
        np.testing.assert_allclose(dh, d, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(spec.sigma).max()))


@settings(max_examples=100, deadline=None)
@given(specs(max_n=6))
def test_augmented_row_equals_variances(spec):
    d = increment_matrix(augment_with_zero(spec)).d
    np.testing.assert_allclose(d[0, 1:], np.diag(spec.sigma), rtol=1e-12, atol=0)


@settings(max_examples=50, deadline=None)
@given(specs(min_n=2, max_n=5), specs(min_n=2, max_n=5))
def test_sum_kernel_adds_increments(a, b):
    n = min(a.n, b.n)
    sa, sb = a.sigma[:n, :n], b.sigma[:n, :n]
    mk = lambda s: ProcessSpec(tuple(map(str, range(n))), s, np.zeros(n))
    spec = build_from_kernel(
        {"type": "sum", "terms": [{"type": "explicit", "matrix": sa.tolist()}, {"type": "explicit", "matrix": sb.tolist()}]},
        None,
        np.zeros(n),
    )
    np.testing.assert_allclose(
        increment_matrix(spec).d, increment_matrix(mk(sa)).d + increment_matrix(mk(sb)).d, atol=1e-12
    )
