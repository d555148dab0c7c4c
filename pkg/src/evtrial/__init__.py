"""Anytime-valid e-process monitoring for two-arm binary-endpoint trials."""

__version__ = "0.1.0"

from .comparators import (
    BayesRule,
    LookSchedule,
    ObfBoundary,
    TwoArmCounts,
    calibrate_bayes_threshold,
    calibrate_obf,
    obf_boundary_at,
    posterior_prob_superiority,
    wald_z,
)
from .confseq import (
    ConfidenceSequenceState,
    confseq_interval,
    confseq_new,
    confseq_update,
)
from .core import (
    AdaptiveBet,
    BettingEProcess,
    ConfigurationError,
    FixedBet,
    OutcomePair,
    av_pvalue,
    calibrate_p_to_e,
    combine_mean,
    combine_product,
    eprocess_extend,
    eprocess_new,
    eprocess_reject,
    eprocess_update,
)
from .design import (
    DesignAlternative,
    DesignReport,
    design_grid,
    design_report,
    expected_stopping_pairs,
    grow_lambda,
    growth_rate,
)
from .futility import (
    FutilityConfig,
    ReciprocalEProcess,
    futility_cs_check,
    futility_eprocess_new,
    futility_eprocess_update,
    futility_signal,
    futility_simulate,
)
from .platform_trial import (
    HybridLookRow,
    PlatformState,
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
from .session import (
    MonitoringSession,
    load_session,
    save_session,
    session_new,
    session_summary,
    session_update,
    session_update_batch,
)
from .simengine import (
    CalibratedBayesRule,
    EValueRule,
    GsRule,
    NaiveBayesRule,
    NaivePRule,
    RuleResult,
    SimulationConfig,
    SimulationReport,
    parameter_grid,
    recovery_scale_run,
    schedule_study,
    sensitivity_lambda,
    simulate_comparison,
)

__all__ = [name for name in dir() if not name.startswith("_")]
