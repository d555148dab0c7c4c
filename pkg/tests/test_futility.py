import itertools
import math

import numpy as np
import pytest

from evtrial.confseq import confseq_new, confseq_update
from evtrial.core import ConfigurationError, OutcomePair
from evtrial.futility import (
    DEFAULT_LAMBDA_PRIME,
    FutilityConfig,
    futility_cs_check,
    futility_eprocess_new,
    futility_eprocess_update,
    futility_signal,
    futility_simulate,
)


class TestConfig:
    def test_lambda_prime_bound(self):
        with pytest.warns(UserWarning):
            FutilityConfig(0.1, 0.1, 1.0 / 0.9)  # boundary admitted
        with pytest.raises(ConfigurationError):
            FutilityConfig(0.1, 0.1, 1.0 / 0.9 + 1e-6)

    def test_boundary_warns(self):
        with pytest.warns(UserWarning):
            FutilityConfig(0.1, 0.1, 1.0 / 0.9)


class TestReciprocalUpdates:
    def test_concordant_pair_factor(self):
        st = futility_eprocess_new(FutilityConfig(0.1, 0.1, 1.0))
        st = futility_eprocess_update(st, OutcomePair(1, 1))
        assert st.wealth == pytest.approx(1.1)

    def test_boundary_lambda_positive_floor(self):
        with pytest.warns(UserWarning):
            cfg = FutilityConfig(0.1, 0.1, 1.0 / 0.9)
        st = futility_eprocess_update(futility_eprocess_new(cfg), OutcomePair(1, 0))
        # factor 1 + (1/0.9)(0.1 - 1) = 0 exactly; floored, not -inf
        assert math.isfinite(st.log_wealth)
        assert st.wealth < 1e-9

    def test_no_discordance_closed_form(self):
        cfg = FutilityConfig(0.1, 0.1, 0.5)
        st = futility_eprocess_new(cfg)
        for _ in range(50):
            st = futility_eprocess_update(st, OutcomePair(0, 0))
        assert st.wealth == pytest.approx(1.05 ** 50, rel=1e-9)
        assert st.wealth == pytest.approx(11.47, abs=0.01)

    def test_signal_threshold(self):
        cfg = FutilityConfig(0.1, 0.1, 0.5)
        st = futility_eprocess_new(cfg)
        while not futility_signal(st):
            st = futility_eprocess_update(st, OutcomePair(0, 0))
        assert st.wealth >= 10.0


class TestSupermartingale:
    @pytest.mark.parametrize("p_c", [0.2, 0.3])
    def test_exhaustive_at_reverse_null_boundary(self, p_c):
        # p_T - p_C = delta_min exactly: expectation must not exceed 1
        delta_min = 0.1
        p_t = p_c + delta_min
        cfg = FutilityConfig(delta_min, 0.1, DEFAULT_LAMBDA_PRIME)
        for n in (1, 3, 5):
            total = 0.0
            for seq in itertools.product(((0, 0), (0, 1), (1, 0), (1, 1)), repeat=n):
                prob = 1.0
                st = futility_eprocess_new(cfg)
                for x_t, x_c in seq:
                    prob *= (p_t if x_t else 1 - p_t) * (p_c if x_c else 1 - p_c)
                    st = futility_eprocess_update(st, OutcomePair(x_t, x_c))
                total += prob * st.wealth
            assert total <= 1.0 + 1e-10


class TestCsCheck:
    def test_examples(self):
        cs = confseq_new(0.05)
        assert not futility_cs_check(cs, 0.10)  # fresh: (-1, 1)

    def test_upper_bound_below_threshold(self):
        # strongly negative stream drives the upper bound below 0.10
        cs = confseq_new(0.05)
        for _ in range(120):
            cs = confseq_update(cs, OutcomePair(0, 1))
        assert futility_cs_check(cs, 0.10)

    def test_published_interval_does_not_signal(self):
        # interval (-0.034, 0.154) does not exclude delta_min = 0.10
        from evtrial.confseq import confseq_interval
        from evtrial.datasets import DEFAULT_NOVICK_SEED, novick_pairs

        cs = confseq_new(0.05)
        for pair in novick_pairs("A", "B", DEFAULT_NOVICK_SEED):
            cs = confseq_update(cs, pair)
        assert confseq_interval(cs)[1] > 0.10
        assert not futility_cs_check(cs, 0.10)


class TestShortcutEquivalence:
    def test_vectorized_route_matches_full_hull(self):
        # the simulation's delta_min-point shortcut equals the full-grid hull
        # check on sampled streams
        from evtrial.confseq import confseq_interval

        rng = np.random.default_rng(17)
        delta_min, alpha = 0.10, 0.05
        for _ in range(30):
            n = 120
            x_t = (rng.random(n) < 0.33).astype(int)
            x_c = (rng.random(n) < 0.30).astype(int)
            d = (x_t - x_c).astype(np.float64)

            cs = confseq_new(alpha)
            full_hit = False
            for xt, xc in zip(x_t, x_c):
                cs = confseq_update(cs, OutcomePair(int(xt), int(xc)))
                if futility_cs_check(cs, delta_min):
                    full_hit = True
                    break

            res = futility_simulate_stream_shortcut(d, delta_min, alpha)
            assert res == full_hit


def futility_simulate_stream_shortcut(d, delta_min, alpha):
    from evtrial.futility import _cs_lambda_path

    lam = _cs_lambda_path(d[None, :], alpha, None)[0]
    lam = np.minimum(lam, (1 - 1e-6) / (1 + abs(delta_min)))
    lw = np.cumsum(np.log1p(-lam * (d - delta_min)))
    return bool((lw >= math.log(2 / alpha)).any())


class TestSimulate:
    def test_small_run_shapes(self):
        out = futility_simulate(0.33, 0.30, 0.10, reps=2000, seed=5)
        assert 0.0 <= out["detect_rate_cs"] <= 1.0
        assert out["detect_rate_recip"] > out["detect_rate_cs"]

    def test_boundary_of_reverse_null_controls_error(self):
        # p_T - p_C = delta_min exactly: false-futility at most alpha_f + noise
        out = futility_simulate(0.40, 0.30, 0.10, alpha_f=0.10, reps=4000, seed=6)
        se = math.sqrt(0.1 * 0.9 / 4000)
        assert out["detect_rate_recip"] <= 0.10 + 3 * se

    def test_strong_effect_defeats_futility(self):
        out = futility_simulate(0.60, 0.30, 0.10, alpha_f=0.10, reps=2000, seed=7)
        assert out["detect_rate_recip"] < 0.02
