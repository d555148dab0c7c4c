// Service payload shapes. The UI renders these fields verbatim; it computes
// no statistics of its own.

export interface GridPoint {
  lambda: number;
  growth: number;
  expected_pairs: number | null;
}

export interface DesignPayload {
  lambda_star: number;
  growth_rate: number;
  expected_pairs: number | null;
  n_max_recommended?: number;
  alpha?: number;
  warning?: string;
  grid: GridPoint[];
}

export interface CsSummary {
  alpha: number;
  lo: number;
  hi: number;
  delta_hat: number;
}

export interface SessionSummary {
  session_id: string;
  n: number;
  alpha: number;
  threshold_log_e: number;
  log_e: number;
  e_value: number;
  av_p: number;
  cs: CsSummary;
  futility_cs: boolean | null;
  futility_recip_wealth: number | null;
  delta_min: number | null;
  alpha_f: number | null;
  decision: string;
  trajectory?: TrajectoryPoint[];
  appended?: TrajectoryPoint[];
}

export interface TrajectoryPoint {
  n: number;
  log_e: number;
  cs_lo: number;
  cs_hi: number;
}

export interface RuleRow {
  rule: string;
  null_rej: number;
  alt_rej: number;
  se_null: number;
  se_alt: number;
  avg_n_null: number;
  avg_n_alt: number;
}

export interface CompareReport {
  schema: number;
  config: Record<string, unknown>;
  calibration: Record<string, unknown>;
  results: RuleRow[];
  concordance: Record<string, number> | null;
  low_precision: boolean;
}

export interface ProgressEvent {
  done: number;
  total: number;
  partial_rates?: Record<string, { null: number; alt: number }>;
  report?: CompareReport;
}
