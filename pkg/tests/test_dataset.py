import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_force_embed

from horizon_bench.dataset import (
    DegenerateScaleError,
    EmbeddedDataset,
    ScaleParams,
    SeriesTooShortError,
    embed,
    fit_scale,
    inverse_scale,
    min_length,
    split,
)
from horizon_bench.seriesgen import TimeSeries


def ts(values):
    return TimeSeries("t", np.asarray(values, dtype=float), {})


embed_cases = st.tuples(st.integers(1, 8), st.integers(1, 4), st.integers(1, 12)).flatmap(
    lambda dth: st.tuples(st.just(dth), st.integers(min_length(*dth), min_length(*dth) + 60))
)


class TestScaling:
    def test_endpoints(self):
        s, p = fit_scale(ts([0, 5, 10]))
        assert s.values.tolist() == [0.0, 0.5, 1.0]
        assert (p.min, p.max) == (0.0, 10.0)

    def test_unit_interval_unchanged(self):
        v = [0.0, 0.25, 1.0, 0.5]
        assert fit_scale(ts(v))[0].values.tolist() == v

    def test_constant_rejected(self):
        with pytest.raises(DegenerateScaleError):
            fit_scale(ts([2, 2, 2]))

    def test_inverse_examples(self):
        p = ScaleParams(0.0, 10.0)
        assert inverse_scale(0.5, p) == 5.0
        assert inverse_scale(0.0, ScaleParams(-3.7, 2.0)) == -3.7

    def test_scale_params_invariant(self):
        with pytest.raises(ValueError):
            ScaleParams(1.0, 1.0)

    def test_fit_on_subset(self):
        s, p = fit_scale(ts([0, 10, 20]), values=[0, 10])
        assert s.values.tolist() == [0.0, 1.0, 2.0]
        assert p.max == 10.0

    @given(arrays(np.float64, st.integers(2, 200), elements=st.floats(-1e6, 1e6)))
    def test_round_trip(self, v):
        if np.ptp(v) == 0:
            return
        s, p = fit_scale(ts(v))
        assert np.max(np.abs(inverse_scale(s.values, p) - v)) < 1e-12 * max(1.0, np.abs(v).max())
        assert s.values.min() == 0.0 and s.values.max() == 1.0


class TestEmbed:
    def test_one_to_twenty(self):
        d = embed(ts(np.arange(1, 21)), 5, 1, 10)
        assert len(d) == 6
        assert d.inputs[0].tolist() == [1, 2, 3, 4, 5]
        assert d.targets[0].tolist() == list(range(6, 16))
        assert d.inputs[-1].tolist() == [6, 7, 8, 9, 10]
        assert d.targets[-1].tolist() == list(range(11, 21))

    def test_exact_minimum_gives_one_sample(self):
        assert len(embed(ts(np.arange(15)), 5, 1, 10)) == 1

    def test_too_short_reports_minimum(self):
        with pytest.raises(SeriesTooShortError, match="at least 15"):
            embed(ts(np.arange(14)), 5, 1, 10)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            embed(ts(np.arange(30)), 0, 1, 10)

    def test_accepts_plain_arrays(self):
        d = embed(np.arange(20.0), 5, 1, 10)
        assert d.D == 5 and d.T == 1 and d.H == 10

    @given(case=embed_cases)
    @settings(max_examples=100)
    def test_matches_brute_force(self, case):
        (D, T, H), N = case
        x = np.random.default_rng(N * 1000 + D * 100 + T * 10 + H).normal(size=N)
        d = embed(ts(x), D, T, H)
        bi, bt = brute_force_embed(x, D, T, H)
        assert len(d) == N - (D - 1) * T - H
        assert np.array_equal(d.inputs, bi)
        assert np.array_equal(d.targets, bt)

    @given(case=embed_cases, a=st.floats(0.1, 10), b=st.floats(-5, 5))
    @settings(max_examples=40)
    def test_affine_map_commutes(self, case, a, b):
        (D, T, H), N = case
        x = np.arange(N, dtype=float) ** 1.5
        d1 = embed(ts(a * x + b), D, T, H)
        d2 = embed(ts(x), D, T, H)
        assert np.allclose(d1.inputs, a * d2.inputs + b, rtol=0, atol=1e-9 * (1 + np.abs(a * x + b).max()))
        assert np.allclose(d1.targets, a * d2.targets + b, rtol=0, atol=1e-9 * (1 + np.abs(a * x + b).max()))


class TestSplit:
    def make(self, n):
        return EmbeddedDataset(np.arange(n, dtype=float)[:, None], np.arange(n, dtype=float)[:, None], 1, 1, 1)

    def test_sixty_forty(self):
        tr, te = split(self.make(10), 0.6)
        assert len(tr) == 6 and len(te) == 4
        assert tr.inputs[:, 0].tolist() == [0, 1, 2, 3, 4, 5]

    def test_half_of_example(self):
        tr, te = split(embed(ts(np.arange(1, 21)), 5, 1, 10), 0.5)
        assert (len(tr), len(te)) == (3, 3)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.2, 1.5])
    def test_fraction_range(self, frac):
        with pytest.raises(ValueError):
            split(self.make(10), frac)

    def test_empty_side(self):
        with pytest.raises(ValueError, match="empty"):
            split(self.make(3), 0.1)

    @given(n=st.integers(2, 300), frac=st.floats(0.01, 0.99))
    def test_concatenation_reconstructs(self, n, frac):
        d = self.make(n)
        cut = int(np.floor(frac * n))
        if cut in (0, n):
            with pytest.raises(ValueError):
                split(d, frac)
            return
        tr, te = split(d, frac)
        assert len(tr) == cut
        assert np.array_equal(np.concatenate([tr.inputs, te.inputs]), d.inputs)
        assert np.array_equal(np.concatenate([tr.targets, te.targets]), d.targets)
