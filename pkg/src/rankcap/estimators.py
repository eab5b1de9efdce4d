"""Estimator-style wrappers around the complexity and training machinery.

Each class follows the fit/get_params protocol: constructor arguments are
stored verbatim, fitted state lives in trailing-underscore attributes, and
fit returns self.  The network spec (architecture plus caps) is a
constructor parameter because it defines the hypothesis class, not the data.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .complexity import (
    OptimizerConfig,
    default_optimizer_config,
    estimate_diameter,
    estimate_gaussian_complexity,
    estimate_rademacher_complexity,
    norm_based_complexity_linear,
)
from .network import DataSample, NetworkSpec, forward
from .training import TrainConfig, train_projected_sgd


def _as_sample(X, spec=None):
    X = check_array(X, dtype=np.float64)
    if spec is not None and X.shape[1] != spec.input_dim:
        raise ValueError(
            f"X has {X.shape[1]} features, network expects {spec.input_dim}"
        )
    return DataSample.from_array(X)


class _OptimizedEstimator(BaseEstimator):
    """Shared optimizer plumbing: step_size=None derives the default from the
    spec's spectral caps."""

    def __init__(self, spec, step_size=None, iterations=300, restarts=8, seed=0):
        self.spec = spec
        self.step_size = step_size
        self.iterations = iterations
        self.restarts = restarts
        self.seed = seed

    def _optimizer_config(self):
        if not isinstance(self.spec, NetworkSpec):
            raise ValueError("spec must be a NetworkSpec")
        if self.step_size is None:
            base = default_optimizer_config(self.spec, seed=self.seed)
            step = base.step_size
        else:
            step = self.step_size
        return OptimizerConfig(
            step_size=step,
            iterations=self.iterations,
            restarts=self.restarts,
            seed=self.seed,
        )


class _ComplexityEstimatorBase(_OptimizedEstimator):
    def __init__(self, spec, step_size=None, iterations=300, restarts=8,
                 n_draws=50, seed=0, trailing_activation=False):
        super().__init__(spec, step_size=step_size, iterations=iterations,
                         restarts=restarts, seed=seed)
        self.n_draws = n_draws
        self.trailing_activation = trailing_activation

    def _estimate(self, spec, data, cfg):
        raise NotImplementedError

    def fit(self, X, y=None):
        data = _as_sample(X, self.spec)
        cfg = self._optimizer_config()
        estimate = self._estimate(self.spec, data, cfg)
        self.n_features_in_ = data.dim
        self.optimizer_config_ = cfg
        self.estimate_ = estimate
        self.mean_ = estimate.mean
        self.std_error_ = estimate.std_error
        self.per_draw_ = estimate.per_draw
        self.diagnostics_ = estimate.diagnostics
        return self

    def result(self):
        check_is_fitted(self, "estimate_")
        return self.estimate_


class GaussianComplexityEstimator(_ComplexityEstimatorBase):
    """Monte Carlo Gaussian complexity of the constraint class defined by
    `spec`, evaluated on X."""

    def _estimate(self, spec, data, cfg):
        return estimate_gaussian_complexity(
            spec, data, cfg, self.n_draws,
            trailing_activation=self.trailing_activation,
        )


class RademacherComplexityEstimator(_ComplexityEstimatorBase):
    """Monte Carlo Rademacher complexity of the constraint class defined by
    `spec`, evaluated on X."""

    def _estimate(self, spec, data, cfg):
        return estimate_rademacher_complexity(
            spec, data, cfg, self.n_draws,
            trailing_activation=self.trailing_activation,
        )


class NormBasedComplexityEstimator(BaseEstimator):
    """Scalar-noise norm complexity of the linear class on X.

    The closed form ignores rank_cap by construction; the parameter exists so
    the insensitivity can be demonstrated through the same interface.
    """

    def __init__(self, cap=1.0, rank_cap=1, n_draws=50, seed=0):
        self.cap = cap
        self.rank_cap = rank_cap
        self.n_draws = n_draws
        self.seed = seed

    def fit(self, X, y=None):
        data = _as_sample(X)
        estimate = norm_based_complexity_linear(
            data, self.cap, self.rank_cap, self.n_draws, self.seed
        )
        self.n_features_in_ = data.dim
        self.estimate_ = estimate
        self.mean_ = estimate.mean
        self.std_error_ = estimate.std_error
        self.per_draw_ = estimate.per_draw
        return self

    def result(self):
        check_is_fitted(self, "estimate_")
        return self.estimate_


class NetworkDiameterEstimator(_OptimizedEstimator):
    """Lower bound on the output-set diameter of the constraint class on X."""

    def fit(self, X, y=None):
        data = _as_sample(X, self.spec)
        cfg = self._optimizer_config()
        self.n_features_in_ = data.dim
        self.optimizer_config_ = cfg
        self.diameter_ = estimate_diameter(self.spec, data, cfg)
        return self

    def result(self):
        check_is_fitted(self, "diameter_")
        return self.diameter_


class LowRankMLPClassifier(ClassifierMixin, BaseEstimator):
    """Binary classifier: projected-SGD training under `spec`'s rank and
    spectral caps, scalar network output as the decision function."""

    def __init__(self, spec, epochs=20, learning_rate=0.1, batch_size=32,
                 seed=0, label_noise=0.0, loss="margin"):
        self.spec = spec
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.label_noise = label_noise
        self.loss = loss

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if not isinstance(self.spec, NetworkSpec):
            raise ValueError("spec must be a NetworkSpec")
        if self.spec.output_dim != 1:
            raise ValueError(
                f"network must have scalar output, got {self.spec.output_dim}"
            )
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(f"need exactly two classes, got {classes.size}")
        data = _as_sample(X, self.spec)
        signs = np.where(y == classes[1], 1.0, -1.0)
        cfg = TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            seed=self.seed,
            label_noise=self.label_noise,
            loss=self.loss,
        )
        result = train_projected_sgd(self.spec, data, signs, cfg)
        self.classes_ = classes
        self.n_features_in_ = data.dim
        self.weights_ = result.weights
        self.trace_ = result.trace
        return self

    def decision_function(self, X):
        check_is_fitted(self, "weights_")
        data = _as_sample(X, self.spec)
        return forward(self.weights_, self.spec, data).outputs[0].copy()

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[(scores > 0.0).astype(int)]
