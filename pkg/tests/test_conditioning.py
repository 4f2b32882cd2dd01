import numpy as np
import pytest

from factorrisk import (
    EmptyEventError,
    JointSample,
    LevelMap,
    ValidationError,
    VarBox,
    partition_discrete,
    partition_quantile_boxes,
    tail_box,
    var_box_event,
)


class TestPartitionDiscrete:
    def test_d1(self, d1_sample):
        part = partition_discrete(d1_sample)
        assert part.n_scenarios == 2
        assert part.labels == (0.0, 1.0)
        assert np.allclose(part.weights, [0.5, 0.5])

    def test_single_scenario(self):
        s = JointSample(np.arange(4.0), np.full(4, 2.0))
        part = partition_discrete(s)
        assert part.n_scenarios == 1
        assert part.weights[0] == pytest.approx(1.0)

    def test_lex_order_two_factors(self):
        facs = np.array([[1.0, 5.0], [0.0, 9.0], [1.0, 2.0]])
        s = JointSample(np.arange(3.0), facs)
        part = partition_discrete(s)
        assert part.labels == ((0.0, 9.0), (1.0, 2.0), (1.0, 5.0))

    def test_coverage_and_total_weight(self):
        rng = np.random.default_rng(0)
        s = JointSample(rng.normal(size=40), rng.integers(0, 4, size=40).astype(float),
                        rng.random(40))
        part = partition_discrete(s)
        counted = sum(scen.rows.size for scen in part.scenarios)
        assert counted == 40
        assert sum(s.weight for s in part.scenarios) == pytest.approx(1.0, abs=1e-12)


class TestQuantileBoxes:
    def test_d1_two_bins_matches_discrete(self, d1_sample):
        boxes = partition_quantile_boxes(d1_sample, 2)
        disc = partition_discrete(d1_sample)
        assert boxes.n_scenarios == disc.n_scenarios
        for a, b in zip(boxes.scenarios, disc.scenarios):
            assert set(a.rows.tolist()) == set(b.rows.tolist())

    def test_single_bin(self, d1_sample):
        part = partition_quantile_boxes(d1_sample, 1)
        assert part.n_scenarios == 1

    def test_quarter_weights(self):
        rng = np.random.default_rng(1)
        s = JointSample(rng.normal(size=100), rng.permutation(100).astype(float))
        part = partition_quantile_boxes(s, 4)
        assert part.n_scenarios == 4
        for scen in part.scenarios:
            assert abs(scen.weight - 0.25) <= 1.0 / 100 + 1e-12

    def test_bins_equal_distinct_values_matches_discrete(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(2, 5))
            reps = int(rng.integers(1, 4))
            vals = np.repeat(np.sort(rng.choice(20, k, replace=False)).astype(float), reps)
            s = JointSample(rng.normal(size=vals.size), rng.permutation(vals))
            boxes = partition_quantile_boxes(s, k)
            disc = partition_discrete(s)
            assert boxes.n_scenarios == disc.n_scenarios
            box_sets = sorted(tuple(sorted(sc.rows.tolist())) for sc in boxes.scenarios)
            disc_sets = sorted(tuple(sorted(sc.rows.tolist())) for sc in disc.scenarios)
            assert box_sets == disc_sets

    def test_partition_covers(self):
        rng = np.random.default_rng(3)
        s = JointSample(rng.normal(size=60), rng.normal(size=(60, 2)))
        part = partition_quantile_boxes(s, 3)
        counted = sum(sc.rows.size for sc in part.scenarios)
        assert counted == 60
        assert sum(sc.weight for sc in part.scenarios) == pytest.approx(1.0, abs=1e-12)


class TestVarBoxEvent:
    def test_d1_tail(self, d1_sample):
        ev = var_box_event(d1_sample, tail_box(0.75))
        assert ev.n_rows == 4
        assert np.all(ev.factors[:, 0] == 1.0)
        assert np.allclose(ev.weights, 0.25)

    def test_tiny_alpha_keeps_smallest(self):
        s = JointSample(np.arange(5.0), np.array([3.0, 1.0, 4.0, 0.0, 2.0]))
        ev = var_box_event(s, VarBox(np.array([1e-9]), np.array([1e-9])))
        assert ev.n_rows == 1
        assert ev.factors[0, 0] == 0.0

    def test_full_box_returns_everything(self, d1_sample):
        ev = var_box_event(d1_sample, VarBox(np.array([1e-12 + 1e-15]), np.array([1.0])))
        assert ev.n_rows == d1_sample.n_rows

    def test_empty_event_rejected(self):
        # anticorrelated factors: the joint upper-tail box holds no row
        facs = np.array([[0.0, 1.0], [1.0, 0.0]])
        s = JointSample(np.array([1.0, 2.0]), facs)
        with pytest.raises(EmptyEventError):
            var_box_event(s, VarBox(np.array([0.75, 0.75]), np.array([1.0, 1.0])))

    def test_box_validation(self):
        with pytest.raises(ValidationError):
            VarBox(np.array([0.5]), np.array([0.4]))
        with pytest.raises(ValidationError):
            VarBox(np.array([0.0]), np.array([1.0]))
        with pytest.raises(ValidationError):
            VarBox(np.array([0.5]), np.array([1.2]))


class TestLevelMap:
    def test_constant(self):
        g = LevelMap.of(0.4).resolve(3)
        assert np.allclose(g, 0.4)

    def test_vector_and_labels(self):
        g = LevelMap.of([0.2, 0.6]).resolve(2)
        assert g.tolist() == [0.2, 0.6]
        by_label = LevelMap.of({0.0: 0.1, 1.0: 0.9})
        assert by_label.resolve(2, labels=(0.0, 1.0)).tolist() == [0.1, 0.9]

    def test_missing_label_rejected(self):
        with pytest.raises(ValidationError):
            LevelMap.of({0.0: 0.1}).resolve(2, labels=(0.0, 1.0))

    def test_domain(self):
        with pytest.raises(ValidationError):
            LevelMap.of(1.5)
        with pytest.raises(ValidationError):
            LevelMap.of([0.5, -0.1])
