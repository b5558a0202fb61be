import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from horizon_bench.numkit import (
    DimensionError,
    NonFiniteError,
    Rng,
    activation,
    activation_deriv,
    as_matrix,
    check_finite,
    finite_diff_grad,
    glorot_init,
    matmul,
    max_relative_error,
    mix64,
    sigmoid,
)

MASK = (1 << 64) - 1


def splitmix64_reference(state: int, n: int) -> list[int]:
    """Textbook SplitMix64 on Python ints."""
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestMatmul:
    def test_identity_left(self):
        assert np.array_equal(matmul([[1, 0], [0, 1]], [[3], [4]]), [[3], [4]])

    def test_hand_product(self):
        assert np.array_equal(matmul([[1, 2], [3, 4]], [[5], [6]]), [[17], [39]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            matmul(np.ones((2, 3)), np.ones((2, 2)))

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
    def test_identity_is_exact(self, a):
        assert np.array_equal(matmul(np.eye(a.shape[0]), a), a)
        assert np.array_equal(matmul(a, np.eye(a.shape[1])), a)

    def test_as_matrix_checks_shape(self):
        assert as_matrix([1.0, 2.0]).shape == (1, 2)
        with pytest.raises(DimensionError):
            as_matrix(np.ones((2, 3)), rows=3)
        with pytest.raises(DimensionError):
            as_matrix(np.ones((2, 3)), cols=2)
        with pytest.raises(DimensionError):
            as_matrix(np.ones((2, 2, 2)))

    def test_check_finite(self):
        check_finite(np.ones(3), "x")
        with pytest.raises(NonFiniteError, match="weights"):
            check_finite(np.array([1.0, np.nan]), "weights")


class TestActivations:
    def test_relu_negative(self):
        assert activation("relu", -2.0) == 0.0

    def test_sigmoid_symmetry_point(self):
        assert activation("sigmoid", 0.0) == 0.5

    def test_tanh_deriv_at_zero(self):
        assert activation_deriv("tanh", 0.0) == 1.0

    def test_relu_deriv_at_zero_is_zero(self):
        assert activation_deriv("relu", 0.0) == 0.0
        assert np.array_equal(activation_deriv("relu", np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 1.0])

    def test_identity(self):
        x = np.array([-1.5, 0.0, 3.0])
        assert np.array_equal(activation("identity", x), x)
        assert np.array_equal(activation_deriv("identity", x), np.ones(3))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            activation("softplus", 1.0)
        with pytest.raises(ValueError):
            activation_deriv("softplus", 1.0)

    def test_sigmoid_extremes_do_not_overflow(self):
        with np.errstate(over="raise"):
            s = sigmoid(np.array([-800.0, 800.0]))
        assert s[0] == 0.0 and s[1] == 1.0

    @pytest.mark.parametrize("kind", ["relu", "sigmoid", "tanh", "identity"])
    @given(x=st.floats(-6, 6).filter(lambda v: abs(v) > 1e-3))
    def test_deriv_matches_central_difference(self, kind, x):
        h = 1e-6
        fd = (activation(kind, np.array(x + h)) - activation(kind, np.array(x - h))) / (2 * h)
        assert float(activation_deriv(kind, np.array(x))) == pytest.approx(float(fd), abs=1e-6)


class TestRng:
    def test_matches_reference_splitmix64(self):
        rng = Rng(12345, stream=3)
        assert rng.next_uint64(50).tolist() == splitmix64_reference(rng._key, 50)

    def test_draws_continue_across_calls(self):
        a = Rng(7)
        b = Rng(7)
        assert np.array_equal(np.concatenate([a.next_uint64(3), a.next_uint64(4)]), b.next_uint64(7))

    def test_mix64_known_value(self):
        # first output of SplitMix64 seeded with 0
        assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF

    def test_same_seed_same_stream(self):
        assert np.array_equal(Rng(99).uniform(100), Rng(99).uniform(100))

    @given(seed=st.integers(0, MASK), s1=st.integers(0, 1000), s2=st.integers(0, 1000))
    @settings(max_examples=50)
    def test_distinct_streams_differ(self, seed, s1, s2):
        if s1 == s2:
            return
        a = Rng(seed, s1).next_uint64(1000)
        b = Rng(seed, s2).next_uint64(1000)
        assert not np.any(a == b)

    def test_substream(self):
        assert np.array_equal(Rng(5).substream(2).uniform(10), Rng(5, 2).uniform(10))

    def test_uniform_range_and_moments(self):
        u = Rng(1).uniform(100_000, -2.0, 3.0)
        assert u.min() >= -2.0 and u.max() < 3.0
        assert u.mean() == pytest.approx(0.5, abs=0.03)

    def test_normal_moments(self):
        z = Rng(2).normal(100_001)
        assert z.size == 100_001
        assert z.mean() == pytest.approx(0.0, abs=0.02)
        assert z.std() == pytest.approx(1.0, abs=0.02)

    @given(n=st.integers(1, 200), seed=st.integers(0, 2**32))
    @settings(max_examples=30)
    def test_permutation_is_permutation(self, n, seed):
        assert sorted(Rng(seed).permutation(n).tolist()) == list(range(n))

    def test_seed_range(self):
        with pytest.raises(ValueError):
            Rng(-1)
        with pytest.raises(ValueError):
            Rng(1 << 64)


class TestGlorot:
    def test_deterministic(self):
        assert np.array_equal(glorot_init(Rng(3), 4, 6), glorot_init(Rng(3), 4, 6))

    def test_square_three_bound(self):
        w = glorot_init(Rng(4), 3, 3)
        assert w.shape == (3, 3)
        assert np.all(np.abs(w) <= 1.0)

    def test_bound_formula(self):
        w = glorot_init(Rng(5), 10, 40)
        assert np.abs(w).max() <= np.sqrt(6 / 50)
        assert np.abs(w).max() > 0.9 * np.sqrt(6 / 50)

    def test_mean_of_many_entries(self):
        assert glorot_init(Rng(6), 100, 1000).mean() == pytest.approx(0.0, abs=0.01)

    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            glorot_init(Rng(0), 0, 3)


class TestFiniteDiff:
    def test_square(self):
        g = finite_diff_grad(lambda t: float(t[0] ** 2), np.array([3.0]), 1e-5)
        assert abs(g[0] - 6.0) < 1e-6

    def test_constant(self):
        assert np.array_equal(finite_diff_grad(lambda t: 4.2, np.ones(5)), np.zeros(5))

    @given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-100, 100)))
    def test_sum_gives_ones(self, theta):
        assert np.allclose(finite_diff_grad(lambda t: float(t.sum()), theta), 1.0, atol=1e-8, rtol=0)

    def test_does_not_mutate_params(self):
        theta = np.array([1.0, 2.0])
        finite_diff_grad(lambda t: float(t @ t), theta)
        assert theta.tolist() == [1.0, 2.0]

    def test_non_finite_names_coordinate(self):
        def f(t):
            return np.inf if t[2] > 1.0 else float(t.sum())

        with pytest.raises(NonFiniteError, match="coordinate 2"):
            finite_diff_grad(f, np.array([0.0, 0.0, 1.0, 0.0]))

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda t: 0.0, np.ones(2), eps=0.0)

    def test_max_relative_error(self):
        assert max_relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert max_relative_error([1.0], [3.0]) == pytest.approx(0.5)
        assert max_relative_error([0.0], [1e-12]) == pytest.approx(1e-4)
