"""Tests for src/svm/tuning.py"""

import numpy as np
import pytest

from src.bsif import ScaleId
from src.errors import InvalidDataError
from src.svm import (
    ATTACK,
    BONAFIDE,
    ParameterGrid,
    TrainSet,
    decision_function,
    labels_from_decisions,
    stratified_folds,
    train_auto,
    train_smo,
)


class TestParameterGrid:

    def test_default_grid(self):
        grid = ParameterGrid()
        assert len(grid.c_values) == 11
        assert len(grid.gamma_values) == 10
        assert len(grid) == 110
        assert grid.c_values[0] == 2.0 ** -5 and grid.c_values[-1] == 2.0 ** 15
        assert grid.gamma_values[0] == 2.0 ** -15 and grid.gamma_values[-1] == 2.0 ** 3

    def test_cells_ascending(self):
        grid = ParameterGrid((4.0, 1.0), (0.5, 0.25))
        assert list(grid.cells()) == [(1.0, 0.25), (1.0, 0.5), (4.0, 0.25), (4.0, 0.5)]

    @pytest.mark.parametrize("c_values,gamma_values", [((), (1.0,)), ((1.0,), (0.0,)), ((-1.0,), (1.0,))])
    def test_rejects(self, c_values, gamma_values):
        with pytest.raises(InvalidDataError):
            ParameterGrid(c_values, gamma_values)


class TestStratifiedFolds:

    @pytest.fixture
    def labels(self):
        return np.array([ATTACK] * 12 + [BONAFIDE] * 18)

    def test_partition(self, labels):
        folds = stratified_folds(labels, 3, seed=4)
        assert len(folds) == 3
        assert sorted(np.concatenate(folds).tolist()) == list(range(30))
        for fold in folds:
            assert np.count_nonzero(labels[fold] == ATTACK) == 4
            assert np.count_nonzero(labels[fold] == BONAFIDE) == 6

    def test_deterministic(self, labels):
        a = stratified_folds(labels, 5, seed=9)
        b = stratified_folds(labels, 5, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_seed_changes_folds(self, labels):
        a = stratified_folds(labels, 3, seed=1)
        b = stratified_folds(labels, 3, seed=2)
        assert not all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_few_per_class(self):
        with pytest.raises(InvalidDataError):
            stratified_folds(np.array([ATTACK] * 3 + [BONAFIDE] * 10), 5, seed=0)

    def test_at_least_two_folds(self, labels):
        with pytest.raises(InvalidDataError):
            stratified_folds(labels, 1, seed=0)


class TestTrainAuto:

    @pytest.fixture
    def data(self, blobs):
        X, y = blobs
        return TrainSet(X, y, scale_id=ScaleId(3), n=5)

    def test_report_covers_grid(self, data):
        grid = ParameterGrid((1.0, 10.0), (1.0, 2.0))
        model, report = train_auto(data, grid=grid, k=5, seed=1)
        assert len(report.cells) == 4
        assert report.fold_sizes == (4, 4, 4, 4, 4)
        assert all(len(cell.fold_ccrs) == 5 for cell in report.cells)
        assert report.best_ccr == max(cell.mean_ccr for cell in report.cells)

    def test_ties_go_to_smallest_c_then_gamma(self, data):
        grid = ParameterGrid((1.0, 10.0), (1.0, 2.0))
        model, report = train_auto(data, grid=grid, k=5, seed=1)
        assert report.best_ccr == 1.0
        assert (report.best_c, report.best_gamma) == (1.0, 1.0)
        assert (model.c, model.gamma) == (1.0, 1.0)

    def test_model_carries_scale(self, data):
        model, _ = train_auto(data, grid=ParameterGrid((1.0,), (1.0,)), k=5, seed=1)
        assert model.scale_id == ScaleId(3) and model.n == 5

    def test_deterministic(self, data):
        grid = ParameterGrid((0.5, 4.0), (0.5, 2.0))
        m1, r1 = train_auto(data, grid=grid, k=4, seed=7)
        m2, r2 = train_auto(data, grid=grid, k=4, seed=7)
        assert m1 == m2
        assert r1.rows() == r2.rows()

    def test_rows_mark_one_selection(self, data):
        grid = ParameterGrid((1.0, 10.0), (1.0, 2.0))
        _, report = train_auto(data, grid=grid, k=5, seed=1)
        rows = report.rows()
        assert report.header()[:4] == ["c", "gamma", "mean_ccr", "selected"]
        assert sum(int(row[3]) for row in rows) == 1
        assert all(len(row) == 4 + 5 for row in rows)

    def test_class_smaller_than_k(self, rng):
        X = rng.normal(size=(12, 2))
        data = TrainSet(X, [ATTACK] * 3 + [BONAFIDE] * 9)
        with pytest.raises(InvalidDataError):
            train_auto(data, grid=ParameterGrid((1.0,), (1.0,)), k=5, seed=0)


class TestSelectionAgainstExhaustiveSearch:
    """40 overlapping points, 4 x 4 grid, 10 folds"""

    GRID = ParameterGrid((0.125, 1.0, 8.0, 64.0), (0.125, 0.5, 2.0, 8.0))

    @pytest.fixture
    def data(self):
        rng = np.random.default_rng(40)
        X = np.vstack([rng.normal(0.8, 1.0, size=(23, 2)), rng.normal(-0.8, 1.0, size=(17, 2))])
        return TrainSet(X, [ATTACK] * 23 + [BONAFIDE] * 17)

    def test_fold_sizes_balanced(self, data):
        folds = stratified_folds(data.labels, 10, seed=3)
        sizes = [len(f) for f in folds]
        assert sum(sizes) == 40
        assert max(sizes) - min(sizes) <= 1
        _, report = train_auto(data, grid=ParameterGrid((1.0,), (0.5,)), k=10, seed=3)
        assert report.fold_sizes == tuple(sizes)

    def test_selects_first_strictly_best_cell(self, data):
        model, report = train_auto(data, grid=self.GRID, k=10, seed=3)

        folds = stratified_folds(data.labels, 10, seed=3)
        everything = np.arange(len(data))
        expected = []
        for c, gamma in self.GRID.cells():
            ccrs = []
            for val in folds:
                fold_model = train_smo(data.subset(np.setdiff1d(everything, val)), c=c, gamma=gamma)
                predicted = labels_from_decisions(decision_function(fold_model, data.features[val]))
                ccrs.append(np.mean(predicted == data.labels[val]))
            expected.append((c, gamma, float(np.mean(ccrs))))

        assert [(cell.c, cell.gamma) for cell in report.cells] == [(c, g) for c, g, _ in expected]
        np.testing.assert_allclose([cell.mean_ccr for cell in report.cells], [m for _, _, m in expected])
        assert len({m for _, _, m in expected}) > 1

        best = max(m for _, _, m in expected)
        first_best = next((c, g) for c, g, m in expected if m == best)
        assert (report.best_c, report.best_gamma) == first_best
        assert (model.c, model.gamma) == first_best

    def test_rerun_identical(self, data):
        m1, r1 = train_auto(data, grid=self.GRID, k=10, seed=3)
        m2, r2 = train_auto(data, grid=self.GRID, k=10, seed=3)
        assert m1 == m2
        assert r1.rows() == r2.rows()
