import numpy as np
import pytest
from helpers import CountingWrapper
from helpers import pinned_margin_oracle as _pinned

from mesampler.attack import (
    AttackConfig,
    CleanPredictionError,
    run_attack,
    step_video,
    stop_condition,
)
from mesampler.oracle import Oracle, OracleTransportError

SHAPE = (1, 4, 4, 3)


def pinned_margin_oracle(seed=7, margin=0.1, scale=4.0):
    return _pinned(SHAPE, seed=seed, margin=margin, scale=scale)


class TestStepVideo:
    def test_zero_gradient_is_identity(self):
        x = np.full(SHAPE, 0.4)
        out = step_video(x, np.zeros(SHAPE), 0.025, x, 0.03)
        assert np.array_equal(out, x)

    def test_positive_gradient_steps_down_by_h(self):
        x0 = np.full(SHAPE, 0.5)
        out = step_video(x0, np.ones(SHAPE), 0.025, x0, 0.03)
        assert np.allclose(out, 0.475)

    def test_repeated_steps_stay_in_ball(self):
        x0 = np.full(SHAPE, 0.5)
        x = x0
        for _ in range(10):
            x = step_video(x, np.ones(SHAPE), 0.025, x0, 0.03)
        assert np.abs(x - x0).max() <= 0.03 + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            step_video(np.zeros(SHAPE), np.zeros((1, 4, 4, 2)), 0.025,
                       np.zeros(SHAPE), 0.03)


class TestStopCondition:
    def test_untargeted(self):
        assert not stop_condition(3, 3, "untargeted")
        assert stop_condition(2, 3, "untargeted")

    def test_targeted(self):
        assert stop_condition(5, 3, "targeted", target=5)
        assert not stop_condition(4, 3, "targeted", target=5)


class TestRunAttack:
    def test_golden_linear_toy(self):
        oracle, y = pinned_margin_oracle()
        res = run_attack(np.full(SHAPE, 0.5), y, oracle,
                         AttackConfig(estimator="bandits_plain", seed=11))
        assert res.success
        assert res.queries_used <= 600
        assert res.queries_used == 7  # frozen from a seeded run
        assert res.iterations == 2
        assert res.linf <= 0.03 + 1e-6
        assert res.metric_queries == res.queries_used
        assert res.final_label != y

    def test_budget_exhaustion_records_consumed_queries(self):
        # margin far beyond the reachable ball: attack cannot succeed
        oracle, y = pinned_margin_oracle(margin=50.0)
        res = run_attack(np.full(SHAPE, 0.5), y, oracle,
                         AttackConfig(estimator="bandits_plain", seed=0, budget=3))
        assert not res.success
        assert res.queries_used == 3  # one full iteration, then exhaustion
        assert res.iterations == 1
        assert res.metric_queries == 3  # failures report the budget

    def test_already_misclassified_errors_after_one_query(self):
        oracle, y = pinned_margin_oracle()
        wrapped = CountingWrapper(oracle)
        with pytest.raises(CleanPredictionError, match="already misclassified") as err:
            run_attack(np.full(SHAPE, 0.5), 1 - y, wrapped, AttackConfig(
                estimator="bandits_plain", seed=0))
        assert err.value.queries_used == 1
        assert wrapped.count == 1

    def test_query_accounting_three_per_iteration(self):
        oracle, y = pinned_margin_oracle(margin=50.0)
        wrapped = CountingWrapper(oracle)
        cfg = AttackConfig(estimator="bandits_plain", seed=1, budget=50)
        res = run_attack(np.full(SHAPE, 0.5), y, wrapped, cfg)
        assert not res.success
        assert res.queries_used == wrapped.count
        # 16 full iterations (48 queries) plus the stop check that could not
        # be followed by a full estimate
        assert res.queries_used == 3 * res.iterations + 1
        assert res.queries_used <= cfg.budget

    def test_success_accounting(self):
        oracle, y = pinned_margin_oracle()
        wrapped = CountingWrapper(oracle)
        res = run_attack(np.full(SHAPE, 0.5), y, wrapped,
                         AttackConfig(estimator="bandits_plain", seed=11))
        assert res.success
        assert res.queries_used == wrapped.count == 3 * res.iterations + 1

    def test_max_iters_cap(self):
        oracle, y = pinned_margin_oracle(margin=50.0)
        cfg = AttackConfig(estimator="bandits_plain", seed=2, budget=10_000,
                           max_iters=5)
        res = run_attack(np.full(SHAPE, 0.5), y, oracle, cfg)
        assert not res.success
        assert res.iterations == 5
        assert res.queries_used == 16  # 3*5 + the final stop check

    def test_deterministic_bit_identical(self):
        for estimator, sampler in (("bandits_plain", "multi_noise"),
                                   ("me_sampler", "one_noise"),
                                   ("nes", "multi_noise")):
            oracle1, y = pinned_margin_oracle()
            oracle2, _ = pinned_margin_oracle()
            cfg = AttackConfig(estimator=estimator, sampler=sampler, seed=3,
                               budget=900)
            r1 = run_attack(np.full(SHAPE, 0.5), y, oracle1, cfg)
            r2 = run_attack(np.full(SHAPE, 0.5), y, oracle2, cfg)
            assert r1.success == r2.success
            assert r1.queries_used == r2.queries_used
            assert r1.iterations == r2.iterations
            assert r1.final_label == r2.final_label
            assert r1.loss_trace == r2.loss_trace
            assert r1.adversarial.tobytes() == r2.adversarial.tobytes()

    def test_loss_trace_comes_from_stop_checks(self):
        oracle, y = pinned_margin_oracle()
        res = run_attack(np.full(SHAPE, 0.5), y, oracle,
                         AttackConfig(estimator="bandits_plain", seed=11))
        iters = [i for i, _ in res.loss_trace]
        assert iters == list(range(len(iters)))
        assert res.loss_trace[0][1] == pytest.approx(0.1)  # clean margin
        assert res.loss_trace[-1][1] == 0.0  # success means margin hit zero

    def test_invariants_over_seeded_attacks(self):
        x0 = np.full(SHAPE, 0.5)
        for seed in range(25):
            oracle, y = pinned_margin_oracle(seed=20 + seed, margin=0.2)
            kappa = 0.03 if seed % 2 == 0 else 0.05
            cfg = AttackConfig(estimator="bandits_plain", seed=seed,
                               kappa=kappa, budget=400)
            res = run_attack(x0, y, oracle, cfg)
            assert res.linf <= kappa + 1e-6
            assert res.adversarial.min() >= 0.0
            assert res.adversarial.max() <= 1.0
            assert res.queries_used - 3 * res.iterations in (0, 1)

    def test_video_out_of_range_rejected(self):
        oracle, y = pinned_margin_oracle()
        with pytest.raises(ValueError):
            run_attack(np.full(SHAPE, 1.4), y, oracle, AttackConfig())

    def test_targeted_mode(self):
        oracle, y = pinned_margin_oracle()
        cfg = AttackConfig.targeted(1 - y, estimator="bandits_plain", seed=4,
                                    budget=2000)
        assert cfg.kappa == 0.05 and cfg.budget == 2000 and cfg.max_iters == 66667
        res = run_attack(np.full(SHAPE, 0.5), y, oracle, cfg)
        assert res.success
        assert res.final_label == 1 - y
        assert res.linf <= 0.05 + 1e-6

    def test_targeted_validation(self):
        oracle, y = pinned_margin_oracle()
        with pytest.raises(ValueError):
            run_attack(np.full(SHAPE, 0.5), y, oracle,
                       AttackConfig.targeted(y))
        with pytest.raises(ValueError):
            run_attack(np.full(SHAPE, 0.5), y, oracle,
                       AttackConfig(mode="targeted"))

    def test_motion_sampler_requires_enough_frames(self):
        oracle, y = pinned_margin_oracle()
        with pytest.raises(ValueError, match="fewer than interval"):
            run_attack(np.full(SHAPE, 0.5), y, oracle,
                       AttackConfig(sampler="me_mv", seed=0))

    def test_flow_sampler_end_to_end(self):
        shape = (4, 6, 6, 3)
        oracle, y = _pinned(shape, seed=31, margin=0.1)
        cfg = AttackConfig(sampler="me_of", seed=2, budget=400,
                           interval_length=2, flow_iterations=20)
        res = run_attack(np.full(shape, 0.5), y, oracle, cfg)
        assert res.linf <= 0.03 + 1e-6
        assert res.queries_used - 3 * res.iterations in (0, 1)

    def test_transport_failure_carries_consumed_queries(self):
        class FlakyOracle(Oracle):
            def __init__(self):
                super().__init__(2)
                self.calls = 0

            def _logits(self, video):
                self.calls += 1
                if self.calls >= 5:
                    raise OracleTransportError("link dropped")
                return np.array([1.0, 0.0])

        oracle = FlakyOracle()
        with pytest.raises(OracleTransportError) as err:
            run_attack(np.full(SHAPE, 0.5), 0, oracle,
                       AttackConfig(estimator="bandits_plain", seed=0))
        assert err.value.queries_consumed == 5

    def test_nes_query_accounting(self):
        oracle, y = pinned_margin_oracle(margin=50.0)
        wrapped = CountingWrapper(oracle)
        cfg = AttackConfig(estimator="nes", nes_samples=4, seed=0, budget=21)
        res = run_attack(np.full(SHAPE, 0.5), y, wrapped, cfg)
        assert not res.success
        # 4 full iterations of 1 + 4 queries, then the final stop check
        assert res.queries_used == wrapped.count == 21

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AttackConfig(kappa=-1.0).validate()
        with pytest.raises(ValueError):
            AttackConfig(sampler="nope").validate()
        with pytest.raises(ValueError):
            AttackConfig(interval_length=1).validate()
        with pytest.raises(ValueError):
            AttackConfig.from_dict({"no_such_key": 1})
        roundtrip = AttackConfig.from_dict(AttackConfig(seed=5).to_dict())
        assert roundtrip == AttackConfig(seed=5)
