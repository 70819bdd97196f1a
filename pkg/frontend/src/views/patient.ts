import type { Patient, SymptomEntry, SymptomPostResponse } from "../api.js";
import { escapeHtml } from "../render.js";

export interface PatientViewUi {
  /** Response of the last symptom post, shown as a confirm step. */
  preview?: SymptomPostResponse;
  /** Text of a failed submission, kept so retry loses nothing. */
  retryText?: string;
  errorText?: string;
  diagnosisPending?: boolean;
}

function chips(findings: string[], removable: boolean): string {
  if (findings.length === 0) {
    return `<span class="empty-state">no recognized findings</span>`;
  }
  return findings
    .map((id) => {
      const remove = removable
        ? `<button type="button" class="chip-remove" data-action="remove-chip" aria-label="dismiss">&times;</button>`
        : "";
      return `<span class="chip" data-finding="${escapeHtml(id)}">${escapeHtml(id)}${remove}</span>`;
    })
    .join("");
}

function warningList(warnings: string[]): string {
  return warnings
    .map((w) => `<span class="warning">${escapeHtml(w)}</span>`)
    .join("");
}

function historyEntries(entries: SymptomEntry[]): string {
  if (entries.length === 0) {
    return `<p class="empty-state">No symptom entries recorded.</p>`;
  }
  return entries
    .map(
      (entry) => `
        <div class="symptom-entry">
          <div class="entry-meta">${escapeHtml(entry.timestamp)}</div>
          <blockquote>${escapeHtml(entry.raw_text)}</blockquote>
          <div class="chip-row">${chips(entry.resolved, false)}</div>
          ${entry.unresolved.length ? `<div class="warning-row">${warningList(entry.unresolved.map((u) => `unrecognized: ${u}`))}</div>` : ""}
        </div>`,
    )
    .join("");
}

export function patientView(patient: Patient, ui: PatientViewUi = {}): string {
  const error = ui.errorText
    ? `
      <div class="error-banner">
        <span>${escapeHtml(ui.errorText)}</span>
        ${ui.retryText !== undefined ? `<button type="button" data-action="retry-symptoms">Retry</button>` : ""}
      </div>`
    : "";
  const preview = ui.preview
    ? `
      <div class="symptom-preview" id="symptom-preview">
        <h3>Recognized findings</h3>
        <div class="chip-row">${chips(ui.preview.resolved, true)}</div>
        ${ui.preview.warnings.length ? `<div class="warning-row">${warningList(ui.preview.warnings)}</div>` : ""}
      </div>`
    : "";
  const hasEntries = patient.symptom_entries.length > 0;
  return `
    <section class="card">
      <h2>${escapeHtml(patient.name)}</h2>
      <p class="patient-meta">${escapeHtml(patient.age)} years, ${escapeHtml(patient.gender)}</p>
      ${error}
      <form id="symptoms-form">
        <label>Symptoms in the patient's words
          <textarea name="text" rows="3" required>${escapeHtml(ui.retryText ?? "")}</textarea>
        </label>
        <button type="submit">Record symptoms</button>
      </form>
      ${preview}
      <div class="diagnose-controls">
        <label>Engine
          <select id="engine-select">
            <option value="rules">rules</option>
            <option value="tree">tree</option>
            <option value="text">text</option>
          </select>
        </label>
        <button type="button" data-action="diagnose"
          ${ui.diagnosisPending || !hasEntries ? "disabled" : ""}>
          ${ui.diagnosisPending ? "Diagnosing..." : "Run diagnosis"}
        </button>
      </div>
    </section>
    <section class="card">
      <h2>Symptom history</h2>
      ${historyEntries(patient.symptom_entries)}
    </section>`;
}
