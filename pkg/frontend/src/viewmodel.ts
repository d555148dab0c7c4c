// Pure render-model builders. Every displayed number is a verbatim service
// field (or a formatting of one); the one client-side operation permitted
// is the display comparison cs.hi < delta_min for the futility flag, which
// mirrors the server's own rule.

import type {
  CompareReport,
  DesignPayload,
  GridPoint,
  RuleRow,
  SessionSummary,
  TrajectoryPoint,
} from "./types.js";

// --- design calculator ------------------------------------------------------

export interface DesignForm {
  p_treatment: number;
  p_control: number;
  alpha: number;
}

export function validateDesignForm(form: DesignForm): string[] {
  // mirrors the server's validation so invalid input never issues a request
  const errors: string[] = [];
  for (const [name, p] of [
    ["treatment rate", form.p_treatment],
    ["control rate", form.p_control],
  ] as const) {
    if (!Number.isFinite(p) || p <= 0 || p >= 1) {
      errors.push(`${name} must be strictly between 0 and 1`);
    }
  }
  if (!Number.isFinite(form.alpha) || form.alpha <= 0 || form.alpha >= 1) {
    errors.push("alpha must be strictly between 0 and 1");
  }
  return errors;
}

export interface DesignViewModel {
  noPower: boolean;
  warning: string | null;
  lambdaStar: number;
  growthRate: number;
  expectedPairs: number | null;
  expectedPairsReadout: string;
  curve: GridPoint[];
  marker: { lambda: number; growth: number };
}

export function designViewModel(payload: DesignPayload): DesignViewModel {
  return {
    noPower: Boolean(payload.warning),
    warning: payload.warning ?? null,
    lambdaStar: payload.lambda_star,
    growthRate: payload.growth_rate,
    expectedPairs: payload.expected_pairs,
    expectedPairsReadout:
      payload.expected_pairs === null
        ? "not reachable"
        : `${Math.round(payload.expected_pairs)} pairs`,
    curve: payload.grid,
    marker: { lambda: payload.lambda_star, growth: payload.growth_rate },
  };
}

// --- monitoring dashboard -----------------------------------------------------

export interface MonitoringViewModel {
  sessionId: string;
  n: number;
  logE: number;
  eValue: number;
  avP: number;
  thresholdLogE: number;
  csLo: number;
  csHi: number;
  deltaHat: number;
  decision: string;
  locked: boolean;
  banner: string | null;
  futilityFlag: boolean;
  futilitySource: "server" | "user" | null;
  points: TrajectoryPoint[];
}

const TERMINAL_BANNERS: Record<string, string> = {
  reject_efficacy: "Efficacy: reject the null (wealth reached 1/alpha)",
  signal_futility_recip: "Futility signal: reciprocal process crossed its threshold",
  signal_futility_cs: "Futility signal: interval upper bound fell below the minimum effect",
};

export function monitoringViewModel(
  summary: SessionSummary,
  userDeltaMin: number | null = null,
): MonitoringViewModel {
  const locked = summary.decision !== "continue";
  let futilityFlag = false;
  let futilitySource: "server" | "user" | null = null;
  if (summary.futility_cs !== null) {
    futilityFlag = summary.futility_cs;
    futilitySource = "server";
  } else if (userDeltaMin !== null) {
    futilityFlag = summary.cs.hi < userDeltaMin;
    futilitySource = "user";
  }
  if (summary.decision === "signal_futility_cs") {
    futilityFlag = true;
    futilitySource = "server";
  }
  return {
    sessionId: summary.session_id,
    n: summary.n,
    logE: summary.log_e,
    eValue: summary.e_value,
    avP: summary.av_p,
    thresholdLogE: summary.threshold_log_e,
    csLo: summary.cs.lo,
    csHi: summary.cs.hi,
    deltaHat: summary.cs.delta_hat,
    decision: summary.decision,
    locked,
    banner: locked ? TERMINAL_BANNERS[summary.decision] ?? summary.decision : null,
    futilityFlag,
    futilitySource,
    points: summary.trajectory ?? [],
  };
}

/** The confidence band may only narrow as pairs accrue; rendering data that
 * widens indicates corrupted or reordered input. */
export function assertBandMonotone(points: TrajectoryPoint[]): void {
  let width = Infinity;
  for (const p of points) {
    const w = p.cs_hi - p.cs_lo;
    if (w > width + 1e-12) {
      throw new Error(
        `confidence band widened at n=${p.n}: ${w} after ${width}`,
      );
    }
    width = w;
  }
}

// --- batch entry ----------------------------------------------------------------

export interface PairEntry {
  x_treatment: number;
  x_control: number;
  count?: number;
}

export interface IndexedPair {
  pair_index: number;
  x_treatment: number;
  x_control: number;
}

/** Expand per-pair rows and aggregate-count rows (in entry order) into the
 * contiguous indexed pairs the batch endpoint expects. */
export function expandBatch(entries: PairEntry[], currentN: number): IndexedPair[] {
  const out: IndexedPair[] = [];
  let index = currentN + 1;
  for (const entry of entries) {
    const count = entry.count ?? 1;
    if (!Number.isInteger(count) || count < 1) {
      throw new Error(`invalid count ${entry.count}`);
    }
    for (const x of [entry.x_treatment, entry.x_control]) {
      if (x !== 0 && x !== 1) {
        throw new Error(`outcomes must be 0 or 1, got ${x}`);
      }
    }
    for (let k = 0; k < count; k++) {
      out.push({
        pair_index: index,
        x_treatment: entry.x_treatment,
        x_control: entry.x_control,
      });
      index += 1;
    }
  }
  return out;
}

// --- method comparison ------------------------------------------------------------

export interface ComparisonRow {
  rule: string;
  nullRej: number;
  altRej: number;
  seNull: number;
  seAlt: number;
  avgNNull: number;
  avgNAlt: number;
}

export function comparisonRows(report: CompareReport): ComparisonRow[] {
  return report.results.map((r: RuleRow) => ({
    rule: r.rule,
    nullRej: r.null_rej,
    altRej: r.alt_rej,
    seNull: r.se_null,
    seAlt: r.se_alt,
    avgNNull: r.avg_n_null,
    avgNAlt: r.avg_n_alt,
  }));
}

export function progressFraction(done: number, total: number): number {
  return total > 0 ? Math.min(1, done / total) : 0;
}
