"""Tests for src/svm kernel and SMO solver."""

import itertools
import math

import numpy as np
import pytest
from sklearn.svm import SVC

from src.bsif import FeatureVector, ScaleId
from src.errors import InvalidDataError, TrainingError
from src.svm import (
    ATTACK,
    BONAFIDE,
    SvmModel,
    TrainSet,
    decision_function,
    kkt_violations,
    labels_from_decisions,
    predict,
    rbf_gram,
    rbf_kernel,
    solve_smo,
    train_smo,
    training_alphas,
)
from src.svm.smo import SmoResult, model_from_solution

XOR_FEATURES = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_LABELS = np.array([BONAFIDE, BONAFIDE, ATTACK, ATTACK])


class TestKernel:

    def test_self_similarity(self):
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.5) == 1.0

    def test_value(self):
        assert rbf_kernel([0.0, 0.0], [1.0, 1.0], 0.5) == pytest.approx(math.exp(-1.0))

    def test_gram_matches_pairwise(self, rng):
        X, Z = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
        K = rbf_gram(X, Z, 0.7)
        expected = [[rbf_kernel(x, z, 0.7) for z in Z] for x in X]
        np.testing.assert_allclose(K, expected, rtol=1e-12)

    def test_gram_symmetric(self, rng):
        X = rng.normal(size=(6, 3))
        K = rbf_gram(X, X, 2.0)
        np.testing.assert_allclose(K, K.T)
        np.testing.assert_allclose(np.diag(K), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidDataError):
            rbf_kernel([1.0, 2.0], [1.0], 1.0)
        with pytest.raises(InvalidDataError):
            rbf_gram(np.zeros((2, 3)), np.zeros((2, 4)), 1.0)

    @pytest.mark.parametrize("gamma", [0.0, -1.0])
    def test_gamma_must_be_positive(self, gamma):
        with pytest.raises(InvalidDataError):
            rbf_kernel([1.0], [2.0], gamma)


class TestTrainSet:

    def test_single_class(self):
        with pytest.raises(InvalidDataError):
            TrainSet(np.zeros((3, 2)), [ATTACK] * 3)

    def test_bad_labels(self):
        with pytest.raises(InvalidDataError):
            TrainSet(np.zeros((2, 2)), [1, 0])

    def test_row_count(self):
        with pytest.raises(InvalidDataError):
            TrainSet(np.zeros((3, 2)), [ATTACK, BONAFIDE])

    def test_from_vectors(self):
        scale = ScaleId(3)
        vectors = [FeatureVector(np.full(32, 1 / 32), scale, 5), FeatureVector(np.eye(32)[0], scale, 5)]
        data = TrainSet.from_vectors(vectors, [ATTACK, BONAFIDE])
        assert data.dimension == 32 and data.scale_id == scale and data.n == 5

    def test_from_vectors_mixed_scales(self):
        vectors = [FeatureVector(np.eye(32)[0], ScaleId(3), 5), FeatureVector(np.eye(32)[1], ScaleId(5), 5)]
        with pytest.raises(InvalidDataError):
            TrainSet.from_vectors(vectors, [ATTACK, BONAFIDE])


class TestSolveSmo:

    def test_two_points_free(self):
        K = rbf_gram([[0.0], [1.0]], [[0.0], [1.0]], 1.0)
        result = solve_smo(K, [ATTACK, BONAFIDE], c=10.0, tol=1e-9)
        expected = 1.0 / (1.0 - math.exp(-1.0))
        np.testing.assert_allclose(result.alpha, [expected, expected], rtol=1e-9)
        assert result.bias == pytest.approx(0.0, abs=1e-9)

    def test_two_points_at_box(self):
        K = rbf_gram([[0.0], [1.0]], [[0.0], [1.0]], 1.0)
        result = solve_smo(K, [ATTACK, BONAFIDE], c=1.0, tol=1e-9)
        np.testing.assert_allclose(result.alpha, [1.0, 1.0])
        assert result.bias == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("c,gamma", [(0.5, 0.5), (2.0, 1.0), (50.0, 0.2)])
    def test_agrees_with_libsvm(self, rng, c, gamma):
        X = np.vstack([rng.normal(1.0, 1.0, size=(15, 2)), rng.normal(-1.0, 1.0, size=(15, 2))])
        y = np.array([ATTACK] * 15 + [BONAFIDE] * 15)
        K = rbf_gram(X, X, gamma)
        result = solve_smo(K, y, c, tol=1e-8)
        ours = K @ (result.alpha * y) + result.bias

        reference = SVC(C=c, kernel="precomputed", tol=1e-8).fit(K, y)
        np.testing.assert_allclose(ours, reference.decision_function(K), atol=1e-4)

    def test_box_and_equality_constraints(self, blobs):
        X, y = blobs
        result = solve_smo(rbf_gram(X, X, 0.5), y, c=2.0, tol=1e-6)
        assert np.all(result.alpha >= 0) and np.all(result.alpha <= 2.0)
        assert abs(result.alpha @ y) < 1e-9

    def test_objective(self, blobs):
        X, y = blobs
        K = rbf_gram(X, X, 0.5)
        result = solve_smo(K, y, c=2.0, tol=1e-6)
        a = result.alpha
        assert result.objective == pytest.approx(a.sum() - 0.5 * (a * y) @ K @ (a * y), rel=1e-9)

    def test_no_convergence_reports_diagnostics(self):
        K = rbf_gram(XOR_FEATURES, XOR_FEATURES, 2.0)
        with pytest.raises(TrainingError) as exc:
            solve_smo(K, XOR_LABELS, c=10.0, max_iter=0)
        assert exc.value.diagnostics["iterations"] == 0
        assert exc.value.diagnostics["gap"] > 0

    def test_kernel_shape_mismatch(self):
        with pytest.raises(InvalidDataError):
            solve_smo(np.eye(3), [ATTACK, BONAFIDE], c=1.0)


class TestTrainSmo:

    def test_xor(self):
        model = train_smo(TrainSet(XOR_FEATURES, XOR_LABELS), c=100.0, gamma=2.0, tol=1e-6)
        np.testing.assert_array_equal(labels_from_decisions(decision_function(model, XOR_FEATURES)), XOR_LABELS)

    def test_separable_blobs(self, blobs):
        X, y = blobs
        model = train_smo(TrainSet(X, y), c=1.0, gamma=0.5)
        np.testing.assert_array_equal(labels_from_decisions(decision_function(model, X)), y)

    def test_kkt_holds(self, blobs):
        X, y = blobs
        data = TrainSet(X, y)
        model = train_smo(data, c=1.0, gamma=0.5, tol=1e-6)
        assert kkt_violations(model, data, tol=1e-3) == []

    def test_model_invariants(self, blobs):
        X, y = blobs
        model = train_smo(TrainSet(X, y), c=1.0, gamma=0.5)
        assert np.all(np.abs(model.dual_coefs) <= 1.0)
        assert abs(model.dual_coefs.sum()) < 1e-6
        assert len(model.dual_coefs) <= len(y)

    def test_label_symmetry(self, blobs):
        X, y = blobs
        model = train_smo(TrainSet(X, y), c=1.0, gamma=0.5, tol=1e-8)
        flipped = train_smo(TrainSet(X, -y), c=1.0, gamma=0.5, tol=1e-8)
        points = np.array([[1.5, 1.5], [0.2, -0.1], [3.1, 2.9]])
        np.testing.assert_allclose(decision_function(flipped, points), -decision_function(model, points), atol=1e-4)

    def test_deterministic(self, blobs):
        X, y = blobs
        assert train_smo(TrainSet(X, y), c=1.0, gamma=0.5) == train_smo(TrainSet(X, y), c=1.0, gamma=0.5)

    def test_dual_objective_matches_solver(self, blobs):
        X, y = blobs
        K = rbf_gram(X, X, 0.5)
        result = solve_smo(K, y, 1.0, tol=1e-6)
        model = train_smo(TrainSet(X, y), c=1.0, gamma=0.5, tol=1e-6)
        assert model.dual_objective() == pytest.approx(result.objective, rel=1e-6)

    def test_training_alphas(self, blobs):
        X, y = blobs
        data = TrainSet(X, y)
        model = train_smo(data, c=1.0, gamma=0.5)
        alphas = training_alphas(model, data)
        assert np.count_nonzero(alphas) == len(model.dual_coefs)


class TestPredict:

    @pytest.fixture
    def model(self):
        return SvmModel(support_vectors=[[1.0, 0.0], [0.0, 1.0]], dual_coefs=[1.0, -1.0], bias=0.0,
                        gamma=1.0, c=1.0)

    def test_predict(self, model):
        label, value = predict(model, np.array([1.0, 0.0]))
        assert label == ATTACK
        assert value == pytest.approx(1.0 - math.exp(-2.0))
        assert predict(model, np.array([0.0, 1.0]))[0] == BONAFIDE

    def test_zero_decision_is_bonafide(self, model):
        label, value = predict(model, np.array([0.5, 0.5]))
        assert value == 0.0
        assert label == BONAFIDE

    def test_dimension_mismatch(self, model):
        with pytest.raises(InvalidDataError):
            predict(model, np.zeros(3))

    def test_coefficient_bound(self):
        with pytest.raises(InvalidDataError):
            SvmModel(support_vectors=[[0.0], [1.0]], dual_coefs=[2.0, -2.0], bias=0.0, gamma=1.0, c=1.0)

    def test_coefficients_balance(self):
        with pytest.raises(InvalidDataError):
            SvmModel(support_vectors=[[0.0], [1.0]], dual_coefs=[0.5, -0.2], bias=0.0, gamma=1.0, c=1.0)


def brute_force_dual(K: np.ndarray, y: np.ndarray, c: float):
    """Exact dual optimum by enumerating every lower / upper / free assignment.

    Each assignment fixes the bound alphas and solves the equality-constrained
    stationarity system for the free ones; the best feasible point is the
    optimum. Returns (objective, alpha, bias), bias None without free alphas.
    """
    m = len(y)
    Q = np.outer(y, y) * K
    best = (-np.inf, None, None)
    for states in itertools.product((0, 1, 2), repeat=m):
        states = np.array(states)
        alpha = np.where(states == 1, c, 0.0)
        free = np.flatnonzero(states == 2)
        fixed = np.flatnonzero(states != 2)
        bias = None
        if free.size:
            A = np.zeros((free.size + 1, free.size + 1))
            A[:-1, :-1] = Q[np.ix_(free, free)]
            A[:-1, -1] = y[free]
            A[-1, :-1] = y[free]
            rhs = np.append(1.0 - Q[np.ix_(free, fixed)] @ alpha[fixed], -(y[fixed] @ alpha[fixed]))
            try:
                solution = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            alpha[free] = solution[:-1]
            bias = solution[-1]
            if np.any(alpha[free] < -1e-12) or np.any(alpha[free] > c + 1e-12):
                continue
        elif abs(y @ alpha) > 1e-12:
            continue
        objective = alpha.sum() - 0.5 * alpha @ Q @ alpha
        if objective > best[0]:
            best = (objective, alpha, bias)
    return best


class TestDualOracle:
    """Small random problems solved exactly by enumeration"""

    GRID = np.stack(np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13)), axis=-1).reshape(-1, 2)

    @staticmethod
    def random_problem(rng):
        m = int(rng.integers(2, 7))
        X = rng.normal(0.0, 1.5, size=(m, 2))
        y = np.where(rng.random(m) < 0.5, ATTACK, BONAFIDE)
        y[0], y[1] = ATTACK, BONAFIDE
        c = float(rng.choice([0.1, 1.0, 10.0]))
        gamma = float(rng.choice([0.5, 1.0, 2.0]))
        return X, y, c, gamma

    def test_two_hundred_problems(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            X, y, c, gamma = self.random_problem(rng)
            K = rbf_gram(X, X, gamma)
            oracle_objective, oracle_alpha, oracle_bias = brute_force_dual(K, y.astype(float), c)

            result = solve_smo(K, y, c, tol=1e-8)
            assert abs(result.objective - oracle_objective) <= 1e-6

            data = TrainSet(X, y)
            model = train_smo(data, c=c, gamma=gamma, tol=1e-8)
            assert kkt_violations(model, data, tol=1e-3) == []

            if oracle_bias is None:
                continue
            reference = rbf_gram(self.GRID, X, gamma) @ (oracle_alpha * y) + oracle_bias
            decided = np.abs(reference) > 1e-5
            np.testing.assert_array_equal(
                labels_from_decisions(decision_function(model, self.GRID))[decided],
                labels_from_decisions(reference)[decided],
            )

    def test_oracle_matches_closed_form(self):
        K = rbf_gram([[0.0], [1.0]], [[0.0], [1.0]], 1.0)
        objective, alpha, bias = brute_force_dual(K, np.array([1.0, -1.0]), 10.0)
        expected = 1.0 / (1.0 - math.exp(-1.0))
        np.testing.assert_allclose(alpha, [expected, expected], rtol=1e-9)
        assert bias == pytest.approx(0.0, abs=1e-9)
        assert objective == pytest.approx(expected, rel=1e-9)


class TestModelFromSolution:

    def test_duplicate_rows_keep_their_own_alpha(self):
        data = TrainSet([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]], [ATTACK, ATTACK, BONAFIDE])
        result = SmoResult(alpha=np.array([0.0, 0.5, 0.5]), bias=0.0, iterations=1, gap=0.0, objective=0.0)
        model = model_from_solution(data, result, c=1.0, gamma=1.0)
        np.testing.assert_array_equal(model.support_indices, [1, 2])
        np.testing.assert_array_equal(training_alphas(model, data), [0.0, 0.5, 0.5])

    def test_value_matching_without_indices(self):
        data = TrainSet([[0.0, 0.0], [0.0, 0.0]], [ATTACK, BONAFIDE])
        stored = SvmModel(support_vectors=[[0.0, 0.0], [0.0, 0.0]], dual_coefs=[0.5, -0.5], bias=0.0,
                          gamma=1.0, c=1.0)
        np.testing.assert_array_equal(training_alphas(stored, data), [0.5, 0.5])

    def test_pruning_keeps_equality_constraint(self, rng):
        X = rng.normal(size=(1002, 2))
        y = np.array([ATTACK] * 1001 + [BONAFIDE])
        alpha = np.full(1002, 5e-9)
        alpha[1000] = 0.5
        alpha[1001] = 0.5 + 1000 * 5e-9
        result = SmoResult(alpha=alpha, bias=0.0, iterations=1, gap=0.0, objective=0.0)
        model = model_from_solution(TrainSet(X, y), result, c=1.0, gamma=1.0)
        assert len(model.dual_coefs) == 1002
        assert abs(model.dual_coefs.sum()) <= 1e-6

    def test_tiny_alphas_pruned_when_balanced(self):
        data = TrainSet([[0.0], [1.0], [2.0]], [ATTACK, BONAFIDE, ATTACK])
        result = SmoResult(alpha=np.array([0.5, 0.5, 1e-10]), bias=0.0, iterations=1, gap=0.0, objective=0.0)
        model = model_from_solution(data, result, c=1.0, gamma=1.0)
        np.testing.assert_array_equal(model.support_indices, [0, 1])
