import type { DifferentialEntry, Report, TreatmentPlan } from "../api.js";
import { barWidth, escapeHtml } from "../render.js";

function entryRow(entry: DifferentialEntry, rank: number, chosen: string | null): string {
  const canChoose = chosen === null;
  const isChosen = chosen === entry.disease_id;
  const matched = entry.matched
    .map((a) => `<li>${escapeHtml(a.predicate)}(${escapeHtml(a.constant)})</li>`)
    .join("");
  const missing = entry.missing.map((m) => `<li>${escapeHtml(m)}</li>`).join("");
  const fired = entry.fired_rules.map((r) => `<li>${escapeHtml(r)}</li>`).join("");
  return `
    <div class="differential-entry${isChosen ? " chosen" : ""}" data-disease="${escapeHtml(entry.disease_id)}">
      <div class="entry-head">
        <span class="rank">${rank}</span>
        <span class="disease-id">${escapeHtml(entry.disease_id)}</span>
        <span class="score-bar"><span class="score-fill" data-score="${escapeHtml(entry.score)}" style="width: ${barWidth(entry.score)}"></span></span>
        <span class="score-value">${escapeHtml(entry.score)}</span>
        ${canChoose ? `<button type="button" data-action="choose" data-disease="${escapeHtml(entry.disease_id)}">Choose</button>` : ""}
        ${isChosen ? `<span class="chosen-mark">chosen</span>` : ""}
      </div>
      <details>
        <summary>details</summary>
        <div class="entry-details">
          <h4>Matched</h4><ul>${matched || "<li>none</li>"}</ul>
          <h4>Missing</h4><ul>${missing || "<li>none</li>"}</ul>
          <h4>Fired rules</h4><ul>${fired || "<li>none</li>"}</ul>
        </div>
      </details>
    </div>`;
}

function planSection(title: string, items: TreatmentPlan["principle"]): string {
  const rows = items
    .map(
      (item) => `
        <li data-treatment="${escapeHtml(item.id)}">
          <span class="treatment-label">${escapeHtml(item.label)}</span>
          <small class="provenance">${escapeHtml(item.provenance.join(", "))}</small>
        </li>`,
    )
    .join("");
  return `<h3>${escapeHtml(title)}</h3><ul class="treatment-list">${rows || "<li>none recorded</li>"}</ul>`;
}

export function reportView(report: Report): string {
  const warnings = report.differential.warnings
    .map((w) => `<span class="warning">unknown finding: ${escapeHtml(w)}</span>`)
    .join("");
  const entries = report.differential.entries.length
    ? report.differential.entries
        .map((entry, index) => entryRow(entry, index + 1, report.chosen_disease))
        .join("")
    : `<p class="empty-state">The differential is empty; nothing to choose.</p>`;
  const plan = report.plan
    ? `
      <section class="card" id="treatment-panel">
        <h2>Treatment plan for ${escapeHtml(report.chosen_disease)}</h2>
        ${planSection("Principles", report.plan.principle)}
        ${planSection("Regimental therapy", report.plan.regimental)}
        ${planSection("Prevention", report.plan.prevention)}
      </section>`
    : "";
  return `
    <section class="card">
      <h2>Diagnosis report</h2>
      <p class="report-meta">
        engine <strong>${escapeHtml(report.engine)}</strong>,
        patient <a href="#/patients/${escapeHtml(report.patient_id)}">${escapeHtml(report.patient_id)}</a>
      </p>
      ${warnings ? `<div class="warning-row">${warnings}</div>` : ""}
      <div id="differential">${entries}</div>
    </section>
    ${plan}`;
}
