"""Multi-platform data-quota negotiation for vertical federated learning under privacy budgets."""
from .config import ScenarioConfig, ValidatedScenario, load_scenario, scenario_from_dict, validate_scenario
from .core import Budget, EstimationConfig, FedGameError, GameHyperparams, InvalidConfig, effective_budget
from .estimation import RegressionModel, fit_regression, predict, run_estimation
from .game import RewardParams, policy_delta, project_policy, reward, reward_gradient, update_policy
from .negotiation import init_policies, run_negotiation, visibility_audit
from .pipeline import evaluate_policy, run_full_experiment, sweep

__version__ = "0.1.0"
