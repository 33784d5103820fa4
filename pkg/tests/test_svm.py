import numpy as np
import pytest

from faup.errors import InvalidInputError
from faup.svm import (
    Sample,
    SVMModel,
    qp_oracle_train,
    svm_objective,
    svm_predict,
    svm_train,
)


def make_samples(x, y, pos="pos", neg="neg"):
    return [Sample(np.atleast_1d(np.asarray(xi, dtype=float)),
                   pos if yi > 0 else neg)
            for xi, yi in zip(x, y)]


def separable_instance(rng, n, d, gap=0.6):
    """Random linearly separable points with a guaranteed margin band."""
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    b = rng.normal() * 0.2
    xs, ys = [], []
    while len(xs) < n or len(set(ys)) < 2:
        x = rng.normal(size=d)
        score = x @ w + b
        if abs(score) < gap:
            x = x + np.sign(score if score != 0 else 1.0) * gap * w
            score = x @ w + b
        xs.append(x)
        ys.append(1.0 if score > 0 else -1.0)
    return np.array(xs), np.array(ys)


class TestTwoPointInstance:
    samples = make_samples([[-1.0], [1.0]], [-1, 1])

    def test_analytic_solution(self):
        model = svm_train(self.samples, C=1000.0)
        assert model.weights[0] == pytest.approx(1.0, abs=1e-3)
        assert model.bias == pytest.approx(0.0, abs=1e-3)
        assert model.margin == pytest.approx(2.0, abs=1e-2)
        assert model.sv_count == 2

    def test_training_scores_canonical(self):
        model = svm_train(self.samples, C=1000.0)
        _, s_neg = svm_predict(model, np.array([-1.0]))
        _, s_pos = svm_predict(model, np.array([1.0]))
        assert s_neg == pytest.approx(-1.0, abs=1e-3)
        assert s_pos == pytest.approx(1.0, abs=1e-3)

    def test_duplicates_leave_hyperplane_unchanged(self):
        model = svm_train(self.samples * 3, C=1000.0)
        base = svm_train(self.samples, C=1000.0)
        assert np.allclose(model.weights, base.weights, atol=1e-3)
        assert model.bias == pytest.approx(base.bias, abs=1e-3)


class TestXor:
    def test_inseparable_accuracy(self):
        x = [[0, 0], [0, 1], [1, 0], [1, 1]]
        y = [-1, 1, 1, -1]
        samples = make_samples(x, y)
        model = svm_train(samples, C=1.0)
        correct = sum(svm_predict(model, np.asarray(xi, dtype=float))[0] == s.label
                      for xi, s in zip(x, samples))
        assert correct <= 3  # 0.75 of 4


class TestOracleAgreement:
    def test_twenty_random_separable_instances(self):
        rng = np.random.default_rng(101)
        for trial in range(20):
            n = int(rng.integers(4, 13))
            d = int(rng.integers(1, 4))
            x, y = separable_instance(rng, n, d)
            samples = make_samples(x, y)
            model = svm_train(samples, C=10.0)
            w_ref, b_ref = qp_oracle_train(samples, C=10.0)
            assert np.allclose(model.weights, w_ref, atol=1e-3), f"trial {trial}"
            assert model.bias == pytest.approx(b_ref, abs=1e-3), f"trial {trial}"
            obj = svm_objective(model.weights, model.bias, samples, 10.0)
            obj_ref = svm_objective(w_ref, b_ref, samples, 10.0)
            assert abs(obj - obj_ref) <= 1e-3
            assert model.kkt_residual <= 1e-3

    def test_oracle_two_point_analytic(self):
        samples = make_samples([[-1.0], [1.0]], [-1, 1])
        w, b = qp_oracle_train(samples, C=1000.0)
        assert w[0] == pytest.approx(1.0, abs=1e-6)
        assert b == pytest.approx(0.0, abs=1e-6)

    def test_regularization_dominates_small_c(self):
        samples = make_samples([[-1.0], [1.0]], [-1, 1])
        model = svm_train(samples, C=1e-6)
        assert np.linalg.norm(model.weights) < 1e-4

    def test_oracle_size_guard(self):
        rng = np.random.default_rng(5)
        x, y = separable_instance(rng, 13, 2)
        with pytest.raises(InvalidInputError):
            qp_oracle_train(make_samples(x, y), C=1.0)
        x, y = separable_instance(rng, 6, 2)
        wide = [Sample(np.concatenate([s.features, [0.0, 0.0]]), s.label)
                for s in make_samples(x, y)]
        with pytest.raises(InvalidInputError):
            qp_oracle_train(wide, C=1.0)


class TestModelInvariants:
    def test_margin_is_two_over_norm(self):
        rng = np.random.default_rng(11)
        x, y = separable_instance(rng, 10, 2)
        model = svm_train(make_samples(x, y), C=10.0)
        assert model.margin == pytest.approx(2.0 / np.linalg.norm(model.weights),
                                             abs=1e-9)
        assert model.sv_count >= 1

    def test_scale_behavior(self):
        rng = np.random.default_rng(13)
        x, y = separable_instance(rng, 10, 3)
        base = svm_train(make_samples(x, y), C=1000.0)
        for s in (0.5, 2.0, 4.0):
            scaled = svm_train(make_samples(x * s, y), C=1000.0)
            assert np.linalg.norm(scaled.weights) == pytest.approx(
                np.linalg.norm(base.weights) / s, rel=1e-2)
            for xi in x:
                lab_base, _ = svm_predict(base, xi)
                lab_scaled, _ = svm_predict(scaled, xi * s)
                assert lab_base == lab_scaled


class TestPredict:
    def test_zero_score_breaks_to_positive(self):
        model = SVMModel(weights=np.array([1.0]), bias=0.0, C=1.0, sv_count=1,
                         margin=2.0, label_map={1: "pos", -1: "neg"},
                         kkt_residual=0.0)
        label, score = svm_predict(model, np.array([0.0]))
        assert score == 0.0
        assert label == "pos"

    def test_score_affine_along_ray(self):
        model = SVMModel(weights=np.array([2.0, -1.0]), bias=0.5, C=1.0,
                         sv_count=1, margin=1.0, label_map={1: "p", -1: "n"},
                         kkt_residual=0.0)
        direction = np.array([0.3, 0.7])
        scores = [svm_predict(model, t * direction)[1] for t in (0.0, 1.0, 2.0)]
        assert scores[2] - scores[1] == pytest.approx(scores[1] - scores[0], abs=1e-12)

    def test_dimension_mismatch(self):
        model = SVMModel(weights=np.array([1.0, 2.0]), bias=0.0, C=1.0,
                         sv_count=1, margin=1.0, label_map={1: "p", -1: "n"},
                         kkt_residual=0.0)
        with pytest.raises(InvalidInputError):
            svm_predict(model, np.zeros(3))


class TestValidation:
    def test_single_class_rejected(self):
        samples = make_samples([[0.0], [1.0]], [1, 1])
        with pytest.raises(InvalidInputError):
            svm_train(samples)

    def test_too_few_samples(self):
        with pytest.raises(InvalidInputError):
            svm_train(make_samples([[0.0]], [1]))

    def test_non_finite_rejected(self):
        samples = make_samples([[0.0], [float("nan")]], [-1, 1])
        with pytest.raises(InvalidInputError):
            svm_train(samples)

    def test_non_positive_c(self):
        samples = make_samples([[-1.0], [1.0]], [-1, 1])
        with pytest.raises(InvalidInputError):
            svm_train(samples, C=0.0)
