"""Scenario builders shared by the test modules."""
import numpy as np

from fedgame.config import ScenarioConfig, validate_scenario
from fedgame.core import EstimationConfig, GameHyperparams
from fedgame.oracle import GeneratedDataSpec, SyntheticSpec, VflTabularSpec

# Row i = true value of each partner's data to platform i. Platform 2
# is the most valuable partner for 0 and 1, platform 0 the most valuable for 2.
ASYMMETRIC_W = ((0.0, 0.8, 2.4), (1.0, 0.0, 2.0), (2.2, 0.8, 0.0))

# Block 2 carries no signal for platforms 0 and 1.
NOISE_PARTNER_SIGNAL = ((1.5, 1.0, 0.0), (1.0, 1.5, 0.0), (1.0, 1.0, 1.5))


def synthetic(weights=ASYMMETRIC_W, intercepts=None, shape="linear", alpha=1.0, noise=0.0, seed=0,
              gamma=2.5, budgets=None, deposit=0.05, k=5, max_rounds=10_000, init="uniform",
              count_deposit=True, mu=1e-4, eta=0.01, epsilon=1e-8):
    n = len(weights)
    intercepts = (0.5,) * n if intercepts is None else intercepts
    config = ScenarioConfig(
        n_platforms=n,
        budgets=tuple(budgets or (1.0,) * n),
        count_deposit=count_deposit,
        game=GameHyperparams(gamma=gamma, eta=eta, epsilon=epsilon, mu=mu, max_rounds=max_rounds),
        init=init,
        estimation=EstimationConfig(k=k, deposit_fraction=deposit),
        oracle=SyntheticSpec(intercepts, weights, shape, alpha, noise),
        seed=seed,
    )
    return validate_scenario(config)


def vfl(signal=None, n_samples=2000, features=5, seed=0, metric="auc", l2=0.1, epochs=300, data_seed=None):
    spec = VflTabularSpec(
        dataset=GeneratedDataSpec(3, n_samples, features, signal, data_seed),
        train_epochs=epochs,
        learning_rate=0.5,
        l2=l2,
        metric=metric,
    )
    config = ScenarioConfig(n_platforms=3, budgets=(1.0, 1.0, 1.0), oracle=spec, seed=seed)
    return validate_scenario(config)


def random_weights(rng, n=3, low=0.2, high=2.0):
    w = rng.uniform(low, high, size=(n, n))
    np.fill_diagonal(w, 0.0)
    return tuple(tuple(r) for r in w)
