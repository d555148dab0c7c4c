import math

import numpy as np
import pytest

from evtrial.comparators import LookSchedule
from evtrial.core import FixedBet, OutcomePair, eprocess_new, eprocess_update
from evtrial.datasets import (
    DEFAULT_NOVICK_SEED,
    HYBRID_DEMO_LAMBDA,
    HYBRID_DEMO_OBF_C,
    hybrid_demo_stream,
    novick_arm_outcomes,
)
from evtrial.design import DesignAlternative, grow_lambda
from evtrial.futility import FutilityConfig
from evtrial.platform_trial import (
    StateError,
    ebh,
    hybrid_monitor,
    platform_add_arm,
    platform_ebh,
    platform_new,
    platform_observe_control,
    platform_snapshot,
    platform_update,
    platform_update_arm,
)

# the paper's look-by-look hybrid table: (look, n, dhat, z, logE, avp)
HYBRID_TABLE = [
    (1, 10, 0.400, 1.952, 0.985, 0.373),
    (2, 20, 0.350, 2.394, 1.801, 0.165),
    (3, 30, 0.333, 2.802, 2.514, 0.081),
    (4, 40, 0.325, 3.128, 3.124, 0.036),
    (5, 50, 0.360, 3.951, 4.484, 0.011),
    (6, 60, 0.333, 4.038, 5.028, 0.007),
    (7, 70, 0.314, 4.007, 5.366, 0.003),
    (8, 80, 0.262, 3.576, 4.889, 0.003),
    (9, 90, 0.267, 3.891, 5.704, 0.003),
    (10, 100, 0.270, 4.131, 6.315, 0.002),
    (11, 110, 0.273, 4.384, 7.130, 0.001),
    (12, 120, 0.258, 4.299, 7.300, 0.000),
    (13, 130, 0.254, 4.367, 7.638, 0.000),
    (14, 140, 0.286, 5.118, 9.541, 0.000),
    (15, 150, 0.267, 4.914, 9.130, 0.000),
    (16, 160, 0.269, 5.125, 9.843, 0.000),
    (17, 170, 0.259, 5.094, 9.910, 0.000),
    (18, 180, 0.250, 5.040, 9.874, 0.000),
    (19, 190, 0.258, 5.352, 10.961, 0.000),
    (20, 200, 0.240, 5.089, 10.278, 0.000),
]


class TestEbh:
    def test_hand_computed_example(self):
        # K=4, alpha=0.05: thresholds 80, 40, 26.7, 20 by rank
        assert ebh([100, 90, 10, 1], 0.05) == [0, 1]

    def test_all_zero(self):
        assert ebh([0, 0, 0], 0.05) == []

    def test_k1_reduces_to_markov_rule(self):
        assert ebh([40.0], 0.025) == [0]
        assert ebh([39.9], 0.025) == []

    def test_monotone_in_evalues(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            es = list(rng.exponential(20, size=6))
            base = set(ebh(es, 0.05))
            for i in range(6):
                bumped = list(es)
                bumped[i] *= 2.0
                assert base <= set(ebh(bumped, 0.05)) | {i}

    def test_ties_stable_order(self):
        assert ebh([50, 50, 50], 0.1) == [0, 1, 2]


class TestPlatformLifecycle:
    def test_single_arm_reduces_to_core(self):
        st = platform_new(planned_arms=1)
        st = platform_add_arm(st, "T", lam=0.3125)
        ep = eprocess_new(FixedBet(0.3125), st.arms["T"].alpha_k)
        for pair in (OutcomePair(1, 0), OutcomePair(0, 1), OutcomePair(1, 1)):
            st = platform_update(st, "T", pair)
            ep = eprocess_update(ep, pair)
        assert st.arms["T"].eprocess.log_wealth == pytest.approx(ep.log_wealth)
        assert len(st.control_ledger) == 3

    def test_graduation_freezes(self):
        st = platform_new(planned_arms=1, efficacy_alpha=0.5)
        st = platform_add_arm(st, "T", lam=0.5, alpha_k=0.5)
        while st.arms["T"].status == "active":
            st = platform_update(st, "T", OutcomePair(1, 0))
        assert st.arms["T"].status == "graduated"
        assert st.arms["T"].eprocess.wealth >= 1 / 0.5
        with pytest.raises(StateError):
            platform_update(st, "T", OutcomePair(1, 0))

    def test_futility_drop(self):
        st = platform_new(planned_arms=1)
        st = platform_add_arm(
            st, "T", lam=0.3, futility_config=FutilityConfig(0.1, 0.1, 0.5)
        )
        while st.arms["T"].status == "active":
            st = platform_update(st, "T", OutcomePair(0, 1))
        assert st.arms["T"].status == "dropped"
        with pytest.raises(StateError):
            platform_update_arm(st, "T", 1)

    def test_alpha_budget_enforced(self):
        st = platform_new(planned_arms=2, efficacy_alpha=0.025)
        st = platform_add_arm(st, "A", lam=0.3)
        st = platform_add_arm(st, "B", lam=0.3)
        with pytest.raises(Exception):
            platform_add_arm(st, "C", lam=0.3, alpha_k=0.02)

    def test_shared_control_per_arm_cursor(self):
        st = platform_new(planned_arms=2)
        st = platform_observe_control(st, 1)
        st = platform_observe_control(st, 0)
        st = platform_add_arm(st, "A", lam=0.3)
        st = platform_add_arm(st, "B", lam=0.3)
        st = platform_update_arm(st, "A", 1)
        st = platform_update_arm(st, "B", 0)
        # both arms consumed the first control outcome independently
        assert st.arms["A"].n == 1 and st.arms["B"].n == 1
        st = platform_update_arm(st, "A", 1)
        with pytest.raises(StateError):
            platform_update_arm(st, "A", 1)  # ledger exhausted for A


class TestUnionBoundFwer:
    def test_three_arm_null_platform(self):
        # vectorized equivalent of a 3-arm null platform with per-arm
        # budget alpha/3: P(any graduation) <= alpha + MC noise
        rng = np.random.default_rng(31)
        reps, n, p, lam = 4000, 200, 0.3, 0.3125
        alpha_k = 0.025 / 3
        thr = math.log(1 / alpha_k)
        any_grad = np.zeros(reps, bool)
        x_c = (rng.random((reps, n)) < p).astype(np.int8)
        for _ in range(3):
            x_t = (rng.random((reps, n)) < p).astype(np.int8)
            d = x_t - x_c
            lw = np.cumsum(
                np.where(d == 1, math.log1p(lam), np.where(d == -1, math.log1p(-lam), 0.0)),
                axis=1,
            )
            any_grad |= (lw >= thr).any(1)
        se = math.sqrt(0.025 * 0.975 / reps)
        assert any_grad.mean() <= 0.025 + 3 * se


class TestNovickPlatform:
    def test_no_ebh_rejections_at_any_look(self):
        lam = grow_lambda(DesignAlternative(0.06, 0.01))
        arms = {a: novick_arm_outcomes(a, DEFAULT_NOVICK_SEED) for a in "ABCD"}
        st = platform_new(fdr_alpha=0.05, efficacy_alpha=0.025, planned_arms=3)
        for arm in ("A", "C", "D"):
            st = platform_add_arm(st, arm, lam=lam)
        for i in range(100):
            st = platform_observe_control(st, int(arms["B"][i]))
            for arm in ("A", "C", "D"):
                if st.arms[arm].status == "active":
                    st = platform_update_arm(st, arm, int(arms[arm][i]))
            if (i + 1) in (25, 50, 75, 100):
                assert platform_ebh(st) == []

    def test_snapshot_shape(self):
        st = platform_new(planned_arms=2)
        st = platform_add_arm(st, "A", lam=0.3)
        snap = platform_snapshot(st)
        assert snap["schema"] == 1
        assert snap["arms"][0]["id"] == "A"
        assert snap["ebh_rejections"] == []


class TestHybridMonitor:
    def test_empty_stream(self):
        assert hybrid_monitor([], LookSchedule("fixed", 200, 20), 2.1452, 0.3125) == []

    def test_av_p_times_sup_is_one(self):
        rows = hybrid_monitor(
            hybrid_demo_stream(), LookSchedule("fixed", 200, 20),
            HYBRID_DEMO_OBF_C, HYBRID_DEMO_LAMBDA,
        )
        # AV p is 1 over the running sup; cross-check against a manual sup
        ep_sup = 0.0
        lw = 0.0
        i = 0
        stream = hybrid_demo_stream()
        for row in rows:
            while i < row.n:
                lw += math.log1p(HYBRID_DEMO_LAMBDA * stream[i].increment)
                ep_sup = max(ep_sup, lw)
                i += 1
            assert row.av_p * math.exp(ep_sup) == pytest.approx(1.0, rel=1e-12)

    def test_demo_stream_reproduces_look_table(self):
        rows = hybrid_monitor(
            hybrid_demo_stream(), LookSchedule("fixed", 200, 20),
            HYBRID_DEMO_OBF_C, HYBRID_DEMO_LAMBDA,
        )
        assert len(rows) == 20
        for row, (look, n, dhat, z, log_e, avp) in zip(rows, HYBRID_TABLE):
            assert row.look == look and row.n == n
            assert row.delta_hat == pytest.approx(dhat, abs=6e-4)
            assert row.z == pytest.approx(z, abs=1.5e-3)
            assert row.log_e == pytest.approx(log_e, abs=1.5e-3)
            assert row.av_p == pytest.approx(avp, abs=6e-4)
            assert row.gs_bound == pytest.approx(HYBRID_DEMO_OBF_C / math.sqrt(n / 200), rel=1e-12)

    def test_demo_decision_pattern(self):
        rows = hybrid_monitor(
            hybrid_demo_stream(), LookSchedule("fixed", 200, 20),
            HYBRID_DEMO_OBF_C, HYBRID_DEMO_LAMBDA,
        )
        first_e = next(r.look for r in rows if r.e_reject)
        first_gs = next(r.look for r in rows if r.gs_reject)
        assert first_e == 5
        assert first_gs == 6
