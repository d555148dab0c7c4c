// Dashboard wiring: three views (design calculator, live monitoring,
// method comparison) over the monitoring service API.

import { ApiClient, HttpError } from "./api.js";
import { bandPath, extent, horizontalRule, linePath, scale } from "./chart.js";
import type { ProgressEvent, SessionSummary } from "./types.js";
import {
  assertBandMonotone,
  comparisonRows,
  designViewModel,
  expandBatch,
  monitoringViewModel,
  progressFraction,
  validateDesignForm,
  type PairEntry,
} from "./viewmodel.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function num(id: string): number {
  return Number((el<HTMLInputElement>(id)).value);
}

// --- tabs -------------------------------------------------------------------

function initTabs(): void {
  const tabs = ["design", "monitor", "compare"];
  for (const tab of tabs) {
    el(`tab-${tab}`).addEventListener("click", () => {
      for (const other of tabs) {
        el(`view-${other}`).hidden = other !== tab;
        el(`tab-${other}`).classList.toggle("active", other === tab);
      }
    });
  }
}

// --- design calculator --------------------------------------------------------

async function runDesign(): Promise<void> {
  const form = {
    p_treatment: num("design-pt"),
    p_control: num("design-pc"),
    alpha: num("design-alpha"),
  };
  const errors = validateDesignForm(form);
  setText("design-errors", errors.join("; "));
  if (errors.length > 0) return; // invalid input issues no request
  try {
    const payload = await api.design(form);
    const vm = designViewModel(payload);
    setText("design-lambda", vm.lambdaStar.toFixed(4));
    setText("design-growth", vm.growthRate.toFixed(6));
    setText("design-expected", vm.expectedPairsReadout);
    setText("design-warning", vm.warning ?? "");
    const xs = vm.curve.map((p) => p.lambda);
    const ys = vm.curve.map((p) => p.growth);
    const xd = extent(xs);
    const yd = extent(ys.concat([0]));
    const sx = scale(xd, 40, 640);
    const sy = scale(yd, 240, 10);
    el<HTMLElement>("design-curve").setAttribute("d", linePath(xs, ys, sx, sy));
    el<HTMLElement>("design-zero").setAttribute(
      "d", horizontalRule(0, sx, sy, xd),
    );
    const marker = el<HTMLElement>("design-marker");
    if (vm.noPower) {
      marker.setAttribute("visibility", "hidden");
    } else {
      marker.setAttribute("visibility", "visible");
      marker.setAttribute("cx", sx(vm.marker.lambda).toFixed(2));
      marker.setAttribute("cy", sy(vm.marker.growth).toFixed(2));
    }
  } catch (err) {
    setText("design-errors", err instanceof Error ? err.message : String(err));
  }
}

// --- monitoring dashboard -------------------------------------------------------

let currentSession: string | null = null;
let mutationInFlight = false;

function renderSession(summary: SessionSummary): void {
  const userDeltaMin = el<HTMLInputElement>("mon-user-dmin").value;
  const vm = monitoringViewModel(
    summary, userDeltaMin === "" ? null : Number(userDeltaMin),
  );
  assertBandMonotone(vm.points);
  setText("mon-n", String(vm.n));
  setText("mon-e", vm.eValue.toFixed(3));
  setText("mon-avp", vm.avP.toFixed(4));
  setText("mon-cs", `[${vm.csLo.toFixed(3)}, ${vm.csHi.toFixed(3)}]`);
  setText("mon-dhat", vm.deltaHat.toFixed(3));
  const banner = el("mon-banner");
  banner.textContent = vm.banner ?? "";
  banner.hidden = vm.banner === null;
  el("mon-futility").hidden = !vm.futilityFlag;
  el<HTMLButtonElement>("mon-send").disabled = vm.locked;
  el<HTMLTextAreaElement>("mon-batch").disabled = vm.locked;

  const pts = vm.points;
  const xs = pts.map((p) => p.n);
  const xd = extent(xs.concat([0]));
  const logEs = pts.map((p) => p.log_e);
  const yd = extent(logEs.concat([0, vm.thresholdLogE]));
  const sx = scale(xd, 40, 640);
  const sy = scale(yd, 240, 10);
  el<HTMLElement>("mon-loge").setAttribute("d", linePath(xs, logEs, sx, sy));
  el<HTMLElement>("mon-threshold").setAttribute(
    "d", horizontalRule(vm.thresholdLogE, sx, sy, xd),
  );
  const bd = extent(pts.flatMap((p) => [p.cs_lo, p.cs_hi]).concat([0]));
  const sb = scale(bd, 420, 270);
  el<HTMLElement>("mon-band").setAttribute(
    "d",
    bandPath(xs, pts.map((p) => p.cs_hi), pts.map((p) => p.cs_lo), sx, sb),
  );
}

async function createSession(): Promise<void> {
  const body: Parameters<typeof api.createSession>[0] = {
    session_id: el<HTMLInputElement>("mon-id").value || undefined,
    design: {
      p_treatment: num("mon-pt"),
      p_control: num("mon-pc"),
      alpha: num("mon-alpha"),
    },
  };
  const dmin = el<HTMLInputElement>("mon-dmin").value;
  if (dmin !== "") body.futility = { delta_min: Number(dmin) };
  try {
    const summary = await api.createSession(body);
    currentSession = summary.session_id;
    setText("mon-session-label", summary.session_id);
    renderSession({ ...summary, trajectory: [] });
    setText("mon-errors", "");
  } catch (err) {
    setText("mon-errors", err instanceof Error ? err.message : String(err));
  }
}

function parseBatchText(text: string): PairEntry[] {
  // per-pair rows "t,c" or aggregate rows "count x t,c", in entry order
  const entries: PairEntry[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    const aggregate = line.match(/^(\d+)\s*x\s*([01])\s*,\s*([01])$/i);
    if (aggregate) {
      entries.push({
        count: Number(aggregate[1]),
        x_treatment: Number(aggregate[2]),
        x_control: Number(aggregate[3]),
      });
      continue;
    }
    const pair = line.match(/^([01])\s*,\s*([01])$/);
    if (!pair) throw new Error(`unparseable row: ${line}`);
    entries.push({ x_treatment: Number(pair[1]), x_control: Number(pair[2]) });
  }
  return entries;
}

async function sendBatch(): Promise<void> {
  if (currentSession === null || mutationInFlight) return;
  mutationInFlight = true;
  el<HTMLButtonElement>("mon-send").disabled = true;
  try {
    const entries = parseBatchText(el<HTMLTextAreaElement>("mon-batch").value);
    const latest = await api.getSession(currentSession);
    const pairs = expandBatch(entries, latest.n);
    if (pairs.length > 0) await api.sendBatch(currentSession, pairs);
    const refreshed = await api.getSession(currentSession);
    renderSession(refreshed);
    el<HTMLTextAreaElement>("mon-batch").value = "";
    setText("mon-errors", "");
  } catch (err) {
    setText("mon-errors", err instanceof Error ? err.message : String(err));
    el<HTMLButtonElement>("mon-send").disabled = false;
  } finally {
    mutationInFlight = false;
  }
}

// --- method comparison ------------------------------------------------------------

const ALL_RULES = ["evalue", "gs", "naive_p", "bayes_naive", "bayes_calibrated"];

async function runComparison(): Promise<void> {
  const rules = ALL_RULES.filter(
    (r) => el<HTMLInputElement>(`cmp-rule-${r}`).checked,
  );
  const config = {
    p_c: num("cmp-pc"),
    p_t_alt: num("cmp-pt"),
    reps: num("cmp-reps"),
    calibration_reps: num("cmp-reps"),
    rules,
  };
  const seed = num("cmp-seed");
  setText("cmp-errors", "");
  el<HTMLElement>("cmp-progress").style.width = "0%";
  try {
    const report = await api.compareStream(config, seed, (ev: ProgressEvent) => {
      const frac = progressFraction(ev.done, ev.total);
      el<HTMLElement>("cmp-progress").style.width = `${(frac * 100).toFixed(0)}%`;
    });
    const rows = comparisonRows(report);
    const body = el("cmp-table-body");
    body.innerHTML = "";
    for (const row of rows) {
      const tr = document.createElement("tr");
      for (const cell of [
        row.rule,
        `${row.nullRej.toFixed(4)} ± ${row.seNull.toFixed(4)}`,
        `${row.altRej.toFixed(4)} ± ${row.seAlt.toFixed(4)}`,
        row.avgNNull.toFixed(1),
        row.avgNAlt.toFixed(1),
      ]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
  } catch (err) {
    if (err instanceof HttpError && err.status === 413) {
      setText("cmp-errors", `replication count over the service cap: ${err.detail}`);
    } else {
      setText("cmp-errors", err instanceof Error ? err.message : String(err));
    }
  }
}

// --- boot ---------------------------------------------------------------------------

export function boot(): void {
  initTabs();
  el("design-run").addEventListener("click", () => void runDesign());
  el("mon-create").addEventListener("click", () => void createSession());
  el("mon-send").addEventListener("click", () => void sendBatch());
  el("cmp-run").addEventListener("click", () => void runComparison());
}

if (typeof document !== "undefined" && document.getElementById("tab-design")) {
  boot();
}
