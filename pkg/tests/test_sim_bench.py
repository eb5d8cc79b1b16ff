"""Benchmark models: ground truth, metrics arithmetic, seeded replication."""

import numpy as np
import pytest
from scipy.special import ndtri
from scipy.stats import f as f_dist

from adjustkit.dag_oracle import true_collection
from adjustkit.data_model import SubsetId
from adjustkit.errors import UnknownModel
from adjustkit.set_analysis import AdjustmentCollection, locally_minimal, upward_closure
from adjustkit.sim_bench import (
    ModelSpec,
    compute_metrics,
    generate_model,
    model_graph,
    run_benchmark,
)

CARDINALITIES = {1: 448, 2: 448, 3: 736, 4: 256, 5: 256}


class TestModelSpec:
    @pytest.mark.parametrize("bad", [0, 6, -1])
    def test_unknown_id(self, bad):
        with pytest.raises(UnknownModel):
            ModelSpec(bad, n=400)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            ModelSpec(1, n=99)

    def test_small_p_rejected(self):
        with pytest.raises(ValueError):
            ModelSpec(1, n=400, p=8)


class TestGroundTruth:
    @pytest.mark.parametrize("mid", [1, 2, 3, 4, 5])
    def test_cardinalities(self, mid):
        gm = generate_model(ModelSpec(mid, n=400, seed=0))
        assert len(gm.truth) == CARDINALITIES[mid]

    @pytest.mark.parametrize("mid", [1, 2, 3])
    def test_dag_models_match_their_oracle(self, mid):
        gm = generate_model(ModelSpec(mid, n=400, seed=0))
        assert gm.truth.masks == true_collection(model_graph(mid)).masks
        assert gm.metadata["truth_source"] == "dag"

    @pytest.mark.parametrize("mid", [4, 5])
    def test_covariance_models_are_supersets_of_the_pair(self, mid):
        gm = generate_model(ModelSpec(mid, n=400, seed=0))
        want = upward_closure(10, [SubsetId.from_indices(10, (1, 2))])
        assert gm.truth.masks == want.masks
        assert gm.metadata["truth_source"] == "analytic"

    def test_collider_truth(self):
        assert generate_model(ModelSpec(1, n=400)).colliders.indices == (4,)
        assert generate_model(ModelSpec(2, n=400)).colliders.indices == (4,)
        assert generate_model(ModelSpec(3, n=400)).colliders.indices == ()
        assert generate_model(ModelSpec(4, n=400)).colliders.indices == ()

    def test_no_dag_for_covariance_models(self):
        with pytest.raises(UnknownModel):
            model_graph(4)


class TestGeneration:
    def test_shapes_and_dtypes(self):
        gm = generate_model(ModelSpec(3, n=250, seed=1))
        d = gm.dataset
        assert d.x.shape == (250, 10)
        assert d.y.shape == (250,)
        assert set(np.unique(d.t)) <= {0, 1}

    def test_seed_reproducibility(self):
        a = generate_model(ModelSpec(2, n=300, seed=7)).dataset
        b = generate_model(ModelSpec(2, n=300, seed=7)).dataset
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.y, b.y)

    def test_seeds_differ(self):
        a = generate_model(ModelSpec(2, n=300, seed=7)).dataset
        b = generate_model(ModelSpec(2, n=300, seed=8)).dataset
        assert not np.array_equal(a.y, b.y)

    def test_model1_derived_coordinate(self):
        # X4 = 1.5 X3 + X1 + noise, so the residual variance is small
        d = generate_model(ModelSpec(1, n=4000, seed=3)).dataset
        resid = d.x[:, 3] - 1.5 * d.x[:, 2] - d.x[:, 0]
        assert np.var(resid) == pytest.approx(0.2, abs=0.03)

    def test_model1_treated_mean_shift(self):
        d = generate_model(ModelSpec(1, n=8000, seed=4)).dataset
        gap = d.x[d.t == 1, :2].mean(axis=0) - d.x[d.t == 0, :2].mean(axis=0)
        assert np.allclose(gap, 0.6, atol=0.06)
        gap_rest = d.x[d.t == 1, 4:].mean(axis=0) - d.x[d.t == 0, 4:].mean(axis=0)
        assert np.all(np.abs(gap_rest) < 0.08)

    def test_model3_binary_coordinates(self):
        d = generate_model(ModelSpec(3, n=500, seed=2)).dataset
        assert set(np.unique(d.x[:, 5])) <= {0.0, 1.0}
        assert set(np.unique(d.x[:, 6])) <= {0.0, 1.0}

    def test_model4_latent_correlation_moves_with_t(self):
        d = generate_model(ModelSpec(4, n=8000, seed=5)).dataset
        z = ndtri(f_dist.cdf(d.x, 2, 3))
        r1 = np.corrcoef(z[d.t == 1, 0], z[d.t == 1, 1])[0, 1]
        r0 = np.corrcoef(z[d.t == 0, 0], z[d.t == 0, 1])[0, 1]
        assert r1 == pytest.approx(0.5, abs=0.05)
        assert r0 == pytest.approx(0.0, abs=0.05)

    def test_model5_noise_scale(self):
        y4 = generate_model(ModelSpec(4, n=4000, seed=6)).dataset.y
        y5 = generate_model(ModelSpec(5, n=4000, seed=6)).dataset.y
        assert np.var(y5) > np.var(y4) + 10


@pytest.fixture(scope="module")
def model1():
    gm = generate_model(ModelSpec(1, n=400, seed=0))
    return gm.truth, gm.colliders


class TestComputeMetrics:
    def test_perfect_recovery(self, model1):
        truth, colliders = model1
        m = compute_metrics(truth, truth, colliders)
        assert (m.rho, m.omega, m.pi) == (1.0, 1.0, 1.0)
        assert (m.true_colliders, m.false_colliders) == (1, 0)

    def test_select_everything(self, model1):
        truth, colliders = model1
        full = AdjustmentCollection.full_universe(10)
        m = compute_metrics(full, truth, colliders)
        assert m.rho == 1.0
        assert m.omega == pytest.approx(448 / 1024)
        assert m.pi == 1.0
        assert (m.true_colliders, m.false_colliders) == (0, 0)

    def test_dropping_a_minimal_member_kills_pi(self, model1):
        truth, colliders = model1
        lost = locally_minimal(truth)[0].mask
        est = AdjustmentCollection.from_masks(10, truth.masks - {lost})
        m = compute_metrics(est, truth, colliders)
        assert m.pi == 0.0
        assert m.rho == pytest.approx(447 / 448)
        assert m.omega == 1.0

    def test_empty_estimate(self, model1):
        truth, colliders = model1
        m = compute_metrics(AdjustmentCollection.from_masks(10, []), truth, colliders)
        assert (m.rho, m.omega, m.pi) == (0.0, 0.0, 0.0)

    def test_dimension_mismatch(self, model1):
        truth, colliders = model1
        other = AdjustmentCollection.full_universe(11)
        with pytest.raises(ValueError):
            compute_metrics(other, truth, colliders)

    def test_as_dict_roundtrip(self, model1):
        truth, colliders = model1
        d = compute_metrics(truth, truth, colliders).as_dict()
        assert d["rho"] == 1.0
        assert set(d) == {"rho", "omega", "pi", "true_colliders", "false_colliders"}


class TestRunBenchmark:
    def test_argument_validation(self):
        with pytest.raises(ValueError):
            run_benchmark(model_ids=(1,), reps=0)
        with pytest.raises(UnknownModel):
            run_benchmark(model_ids=(9,), reps=1)

    def test_thread_count_leaves_no_trace(self):
        kw = dict(model_ids=(1,), n_values=(400,), variants=("mn",), reps=6, seed=0)
        serial = run_benchmark(threads=1, **kw)
        pooled = run_benchmark(threads=4, **kw)
        assert serial.to_csv() == pooled.to_csv()

    def test_repeat_run_is_bit_identical(self):
        kw = dict(
            model_ids=(4,), n_values=(400,), variants=("gc",), reps=3, seed=2,
            arms=(0,),
        )
        assert run_benchmark(**kw).to_csv() == run_benchmark(**kw).to_csv()

    def test_row_grid_and_csv_shape(self):
        res = run_benchmark(
            model_ids=(1,), n_values=(400,), variants=("mn", "gc"), reps=2, seed=1
        )
        # 1 model x 1 n x 2 variants x 2 arms x 5 metrics
        assert len(res.rows) == 20
        lines = res.to_csv().strip().split("\n")
        assert lines[0] == "model,variant,n,metric,arm,value"
        assert len(lines) == 21
        for row in res.rows:
            assert np.isfinite(row["value"])
            assert 0.0 <= row["value"]

    def test_render_mentions_every_cell(self):
        res = run_benchmark(
            model_ids=(1,), n_values=(400,), variants=("mn",), reps=2, seed=1,
            arms=(0,),
        )
        text = res.render()
        assert "rho" in text and "omega" in text
        assert "excluded" not in text
