import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adjustkit.data_model import Dataset
from adjustkit.errors import (
    DegenerateData,
    DegenerateResponse,
    EmptyGroup,
    SingularCovariance,
    SliceTooSmall,
    TooFewObservations,
)
from adjustkit.inverse_regression import (
    SliceAssignment,
    group_moments,
    outcome_candidate,
    save_matrix,
    sir_matrix,
    slice_response,
    treatment_candidate,
)
from adjustkit.sim_bench import ModelSpec, generate_model


class TestSliceResponse:
    def test_binary_passthrough(self):
        s = slice_response([0, 0, 1, 1], h=5)
        assert s.h == 2
        assert s.kind == "discrete-passthrough"
        assert s.labels.tolist() == [1, 1, 2, 2]

    def test_quantile_slices_balanced(self):
        s = slice_response(np.arange(1, 101), h=5)
        assert s.h == 5
        assert s.kind == "quantile-sliced"
        counts = np.bincount(s.labels)[1:]
        assert counts.tolist() == [20, 20, 20, 20, 20]

    def test_labels_monotone_in_value(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=200)
        s = slice_response(v, h=4)
        order = np.argsort(v)
        assert np.all(np.diff(s.labels[order]) >= 0)

    def test_constant_response_warns(self):
        with pytest.warns(DegenerateResponse):
            s = slice_response(np.full(30, 7.0), h=5)
        assert s.h == 1

    def test_too_few_observations(self):
        # 11 distinct values forces the quantile path, which needs m >= h
        with pytest.raises(TooFewObservations):
            slice_response(np.linspace(0.0, 1.0, 11), h=20)

    def test_short_discrete_vector_passes_through(self):
        s = slice_response([3.0, 7.0], h=5)
        assert s.h == 2
        assert s.kind == "discrete-passthrough"

    def test_h_below_two(self):
        with pytest.raises(ValueError):
            slice_response(np.arange(20), h=1)

    def test_ties_merge_empty_slices(self):
        # 60% of mass on one value forces empty quantile bins
        v = np.concatenate([np.zeros(60), np.linspace(1, 2, 40)])
        v += np.linspace(0, 1e-9, 100)  # make values distinct but clustered
        s = slice_response(v, h=5)
        counts = np.bincount(s.labels)[1:]
        assert s.h == len(counts)
        assert np.all(counts > 0)

    @given(st.integers(2, 6), st.integers(30, 90))
    @settings(max_examples=30, deadline=None)
    def test_every_slice_nonempty(self, h, m):
        rng = np.random.default_rng(h * 1000 + m)
        s = slice_response(rng.normal(size=m), h=h)
        assert set(np.unique(s.labels)) == set(range(1, s.h + 1))


class TestSirMatrix:
    def test_one_dim_worked_example(self):
        s = SliceAssignment(labels=np.array([1, 2]), h=2, kind="discrete-passthrough")
        m = sir_matrix(np.array([[-1.0], [1.0]]), s, np.eye(1))
        assert m.m.tolist() == [[-1.0, 1.0]]
        assert m.method == "SIR"

    def test_whitening(self):
        s = SliceAssignment(labels=np.array([1, 2]), h=2, kind="discrete-passthrough")
        m = sir_matrix(np.array([[-1.0], [1.0]]), s, np.array([[2.0]]))
        assert np.allclose(m.m, [[-0.5, 0.5]])

    def test_independent_slices_near_zero(self):
        rng = np.random.default_rng(4)
        n, p = 4000, 3
        x = rng.normal(size=(n, p))
        labels = np.tile(np.arange(1, 5), n // 4)
        s = SliceAssignment(labels=labels, h=4, kind="quantile-sliced")
        m = sir_matrix(x - x.mean(axis=0), s, np.cov(x, rowvar=False, ddof=1))
        assert np.linalg.norm(m.m, 2) < 0.15

    def test_affine_equivariance_diagonal(self):
        rng = np.random.default_rng(9)
        n, p = 300, 4
        x = rng.normal(size=(n, p))
        labels = rng.integers(1, 4, size=n)
        labels[:3] = [1, 2, 3]
        s = SliceAssignment(labels=labels, h=3, kind="quantile-sliced")
        b = np.diag([2.0, 0.5, 3.0, 1.25])
        sigma = np.cov(x, rowvar=False, ddof=1)
        m = sir_matrix(x, s, sigma).m
        mb = sir_matrix(x @ b, s, b @ sigma @ b).m
        assert np.allclose(mb, np.linalg.solve(b, m), atol=1e-10)

    def test_singular_sigma(self):
        s = SliceAssignment(labels=np.array([1, 2]), h=2, kind="discrete-passthrough")
        with pytest.raises(SingularCovariance):
            sir_matrix(np.zeros((2, 2)), s, np.zeros((2, 2)))

    def test_spectral_norm_shrinks_under_null(self):
        # permutation slices independent of x: top singular value decays
        # roughly like 1/sqrt(n), so quadrupling n shrinks the median
        # by a factor between 1.5 and 3
        rng = np.random.default_rng(123)
        p, h, reps = 5, 4, 100

        def median_norm(n):
            out = []
            for _ in range(reps):
                x = rng.normal(size=(n, p))
                labels = np.tile(np.arange(1, h + 1), n // h)
                rng.shuffle(labels)
                s = SliceAssignment(labels=labels, h=h, kind="quantile-sliced")
                m = sir_matrix(
                    x - x.mean(axis=0), s, np.cov(x, rowvar=False, ddof=1)
                )
                out.append(np.linalg.norm(m.m, 2))
            return float(np.median(out))

        ratio = median_norm(400) / median_norm(1600)
        assert 1.5 <= ratio <= 3.0, ratio


class TestSaveMatrix:
    def test_single_slice_exactly_zero(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 3))
        x = x - x.mean(axis=0)
        s = SliceAssignment(
            labels=np.ones(40, dtype=np.int64), h=1, kind="discrete-passthrough"
        )
        sigma = np.cov(x, rowvar=False, ddof=1)
        m = save_matrix(x, s, sigma)
        assert np.all(m.m == 0.0)

    def test_matched_within_covariance_zero_blocks(self):
        x = np.array([[-1.0], [1.0], [-1.0], [1.0]])
        s = SliceAssignment(
            labels=np.array([1, 1, 2, 2]), h=2, kind="discrete-passthrough"
        )
        m = save_matrix(x, s, np.array([[2.0]]))
        assert np.all(m.m == 0.0)

    def test_slice_too_small(self):
        s = SliceAssignment(labels=np.array([1, 1, 2]), h=2, kind="quantile-sliced")
        with pytest.raises(SliceTooSmall):
            save_matrix(np.zeros((3, 2)) + np.eye(3, 2), s, np.eye(2))

    def test_block_shape(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(60, 3))
        labels = np.tile([1, 2, 3], 20)
        s = SliceAssignment(labels=labels, h=3, kind="quantile-sliced")
        m = save_matrix(x, s, np.cov(x, rowvar=False, ddof=1))
        assert m.m.shape == (3, 9)
        assert m.method == "SAVE"


class TestGroupMoments:
    def test_two_point_arm(self):
        t = np.array([0, 0, 1, 1])
        x = np.array([[-1.0], [1.0], [-2.0], [2.0]])
        d = Dataset(t=t, y=np.zeros(4), x=x)
        g0, g1 = group_moments(d)
        assert g0.mu.tolist() == [0.0]
        assert g0.sigma.tolist() == [[2.0]]
        assert g1.sigma.tolist() == [[8.0]]
        assert g0.n_s == 2 and g1.n_s == 2

    def test_marginal_shared(self):
        rng = np.random.default_rng(6)
        d = Dataset(
            t=np.repeat([0, 1], 25),
            y=rng.normal(size=50),
            x=rng.normal(size=(50, 3)),
        )
        g0, g1 = group_moments(d)
        expect = np.cov(d.x, rowvar=False, ddof=1)
        assert np.array_equal(g0.sigma_marginal, expect)
        assert np.array_equal(g1.sigma_marginal, expect)

    def test_empty_arm(self):
        d = Dataset(t=np.zeros(4, dtype=np.int64), y=np.zeros(4), x=np.eye(4))
        with pytest.raises(EmptyGroup):
            group_moments(d)

    def test_single_row_arm(self):
        d = Dataset(
            t=np.array([0, 0, 1]), y=np.zeros(3), x=np.arange(6.0).reshape(3, 2)
        )
        with pytest.raises(TooFewObservations):
            group_moments(d)

    def test_identical_rows_warn(self):
        d = Dataset(
            t=np.array([0, 0, 1, 1]),
            y=np.zeros(4),
            x=np.array([[1.0], [1.0], [0.0], [2.0]]),
        )
        with pytest.warns(DegenerateData):
            group_moments(d)

    def test_model_covariance_concentrates(self):
        # per-arm covariance of the jointly normal coordinates settles
        # near .8 I with ~4000 rows per arm; coordinate 4 is excluded
        # as a combination of the others
        model = generate_model(ModelSpec(1, n=8000, seed=0))
        g0, g1 = group_moments(model.dataset)
        keep = [i for i in range(10) if i != 3]
        for g in (g0, g1):
            block = g.sigma[np.ix_(keep, keep)]
            assert np.linalg.norm(block - 0.8 * np.eye(9)) <= 0.15


class TestCandidates:
    def _dataset(self, n=60, p=3, seed=5):
        rng = np.random.default_rng(seed)
        t = np.tile([0, 1], n // 2)
        x = rng.normal(size=(n, p)) + 0.5 * t[:, None]
        y = x[:, 0] + rng.normal(size=n)
        return Dataset(t=t, y=y, x=x)

    def test_treatment_candidate_matches_manual(self):
        d = self._dataset()
        m = treatment_candidate(d)
        centered = d.x - d.x.mean(axis=0)
        sigma = np.cov(d.x, rowvar=False, ddof=1)
        cols = np.stack(
            [centered[d.t == 0].mean(axis=0), centered[d.t == 1].mean(axis=0)],
            axis=1,
        )
        assert np.allclose(m.m, np.linalg.solve(sigma, cols))
        assert m.h == 2
        assert m.target == "treatment-marginal"

    def test_outcome_candidate_centered_within_arm(self):
        d = self._dataset(n=80)
        m = outcome_candidate(d, t=1, h=2)
        x1 = d.x[d.t == 1]
        y1 = d.y[d.t == 1]
        sigma1 = np.cov(x1, rowvar=False, ddof=1)
        s = slice_response(y1, 2)
        centered = x1 - x1.mean(axis=0)
        cols = np.stack(
            [centered[s.labels == k].mean(axis=0) for k in (1, 2)], axis=1
        )
        assert np.allclose(m.m, np.linalg.solve(sigma1, cols))
        assert m.target == "outcome-in-group-t"

    def test_arm_too_small(self):
        d = self._dataset(n=16)
        with pytest.raises(TooFewObservations):
            outcome_candidate(d, t=0, h=5)

    def test_bad_arm(self):
        with pytest.raises(ValueError):
            outcome_candidate(self._dataset(), t=2)

    def test_save_method_accepted(self):
        d = self._dataset(n=100)
        m = treatment_candidate(d, method="save")
        assert m.method == "SAVE"
        assert m.m.shape == (3, 6)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            treatment_candidate(self._dataset(), method="pca")

    def test_missing_arm(self):
        d = Dataset(
            t=np.zeros(10, dtype=np.int64),
            y=np.arange(10.0),
            x=np.arange(20.0).reshape(10, 2),
        )
        with pytest.raises(EmptyGroup):
            treatment_candidate(d)
