import numpy as np
import pytest

from fedgame.estimation import RegressionModel
from fedgame.game import project_policy
from fedgame.negotiation import (
    Agent,
    PolicyOffer,
    Transcript,
    init_policies,
    read_policy_csv,
    replay,
    run_negotiation,
    visibility_audit,
    write_policy_csv,
)

from scenarios import ASYMMETRIC_W, synthetic


def true_models(weights=ASYMMETRIC_W, b=0.5):
    return [RegressionModel(i, b, np.array(w)) for i, w in enumerate(weights)]


def test_init_uniform():
    m = init_policies(synthetic(), "uniform")
    off = m[~np.eye(3, dtype=bool)]
    assert np.allclose(off, 0.45) and not np.diag(m).any()


def test_init_zero():
    assert not init_policies(synthetic(), "zero").any()


def test_init_random_deterministic():
    s = synthetic()
    a, b = init_policies(s, "random", 4), init_policies(s, "random", 4)
    assert np.array_equal(a, b)
    assert np.all(a.sum(axis=1) <= 0.9 + 1e-12)


def test_zero_weights_converge_in_one_round():
    s = synthetic()
    init = np.array([[0, 0.7, 0.6], [0.1, 0, 0.2], [0.3, 0.3, 0]])
    out = run_negotiation(s, true_models(np.zeros((3, 3))), init)
    assert out.converged and out.rounds_used == 1
    expected = np.array([project_policy(init[i], 0.9, owner=i) for i in range(3)])
    assert np.array_equal(out.final_policies, expected)


def test_max_rounds_zero():
    s = synthetic(max_rounds=0)
    init = np.array([[0, 0.7, 0.6], [0.1, 0, 0.2], [0.3, 0.3, 0]])
    out = run_negotiation(s, true_models(), init)
    assert out.rounds_used == 0 and not out.converged
    assert np.array_equal(out.final_policies, np.array([project_policy(init[i], 0.9, owner=i) for i in range(3)]))


def test_converges_and_exhausts_budget():
    s = synthetic()
    out = run_negotiation(s, true_models(), init_policies(s))
    assert out.converged and out.rounds_used <= 10_000
    assert np.all(np.abs(out.final_policies.sum(axis=1) - 0.9) < 1e-3)


def test_non_convergence_warns(caplog):
    s = synthetic(max_rounds=3)
    out = run_negotiation(s, true_models(), init_policies(s))
    assert not out.converged and out.rounds_used == 3
    assert "without converging" in caplog.text


def test_zero_init_is_stationary():
    # With nothing received every gradient vanishes, so no one moves first.
    s = synthetic()
    out = run_negotiation(s, true_models(), init_policies(s, "zero"))
    assert out.converged and out.rounds_used == 1 and not out.final_policies.any()


def test_audit_passes_and_counts_offers():
    s = synthetic()
    out = run_negotiation(s, true_models(), init_policies(s))
    report = visibility_audit(out.transcript)
    assert report.passed
    assert set(report.offers_per_round.values()) == {6}


class Snoop(Agent):
    """Platform that peeks at one entry it was never sent."""

    def update(self, round):
        if self.platform == 0 and round == 1:
            self._bus.request(0, 1, 2, round)
        return super().update(round)


def test_adversarial_read_is_flagged():
    s = synthetic(max_rounds=5)
    out = run_negotiation(s, true_models(), init_policies(s), agent_cls=Snoop)
    report = visibility_audit(out.transcript)
    assert report.violations == [(0, 1, 2)]


def test_replay_matches_snapshots():
    s = synthetic(max_rounds=200)
    models = true_models()
    out = run_negotiation(s, models, init_policies(s))
    assert replay(out.transcript, models, s.effective_budgets, s.game) == []


def test_replay_detects_tampering():
    s = synthetic(max_rounds=20)
    models = true_models()
    out = run_negotiation(s, models, init_policies(s))
    out.transcript.rounds[5].quota_matrix[0, 1] += 1e-9
    assert replay(out.transcript, models, s.effective_budgets, s.game) == [6]


def test_agent_order_does_not_matter():
    s = synthetic()
    models = true_models()
    a = run_negotiation(s, models, init_policies(s))
    b = run_negotiation(s, models, init_policies(s), order=[2, 0, 1])
    assert np.array_equal(a.final_policies, b.final_policies) and a.rounds_used == b.rounds_used


def test_transcript_text_round_trip():
    s = synthetic(max_rounds=10)
    out = run_negotiation(s, true_models(), init_policies(s))
    text = out.transcript.to_text()
    back = Transcript.from_text(text)
    assert back.to_text() == text
    assert back.offers == out.transcript.offers and back.reads == out.transcript.reads


def test_transcript_rejects_garbage():
    with pytest.raises(ValueError, match="line 2"):
        Transcript.from_text("platforms 3\noffer 1 0\n")


def test_offer_validation():
    with pytest.raises(ValueError):
        PolicyOffer(1, 0, 0, 0.1)
    with pytest.raises(ValueError):
        PolicyOffer(1, 0, 1, -0.1)


def test_policy_csv_round_trip(tmp_path):
    m = np.array([[0, 0.3, 0.6], [0.45, 0, 0.45], [0.1 / 3, 0.2, 0]])
    write_policy_csv(tmp_path / "p.csv", m)
    assert np.array_equal(read_policy_csv(tmp_path / "p.csv"), m)
