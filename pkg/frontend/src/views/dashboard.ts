import type { DashboardStats, Patient } from "../api.js";
import { escapeHtml } from "../render.js";

function genderChart(stats: DashboardStats): string {
  const total = stats.patients_total;
  const rows = Object.entries(stats.patients_by_gender)
    .map(([gender, count]) => {
      const width = total > 0 ? (count / total) * 100 : 0;
      return `
        <div class="chart-row">
          <span class="chart-label">${escapeHtml(gender)}</span>
          <span class="chart-track"><span class="chart-fill" style="width: ${width}%"></span></span>
          <span class="chart-count" data-gender="${escapeHtml(gender)}" data-count="${escapeHtml(count)}">${escapeHtml(count)}</span>
        </div>`;
    })
    .join("");
  return `<div class="chart" id="gender-chart">${rows}</div>`;
}

function countList(title: string, counts: Record<string, number>, kind: string): string {
  const items = Object.entries(counts)
    .map(
      ([key, count]) =>
        `<li><span>${escapeHtml(key)}</span> <strong data-${kind}="${escapeHtml(key)}">${escapeHtml(count)}</strong></li>`,
    )
    .join("");
  return `<h3>${escapeHtml(title)}</h3><ul class="count-list">${items || "<li>none yet</li>"}</ul>`;
}

function patientRows(patients: Patient[]): string {
  if (patients.length === 0) {
    return `<p class="empty-state">No patients yet.</p>`;
  }
  const rows = patients
    .map(
      (p) => `
        <tr>
          <td><a href="#/patients/${escapeHtml(p.id)}">${escapeHtml(p.name)}</a></td>
          <td>${escapeHtml(p.age)}</td>
          <td>${escapeHtml(p.gender)}</td>
          <td>${escapeHtml(p.symptom_entries.length)} entries</td>
        </tr>`,
    )
    .join("");
  return `
    <table class="patient-table">
      <thead><tr><th>Name</th><th>Age</th><th>Gender</th><th>Symptoms</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function dashboardView(stats: DashboardStats | null, patients: Patient[]): string {
  const statsBlock = stats
    ? `
      <section class="card">
        <h2>Patients <span id="patients-total" data-count="${escapeHtml(stats.patients_total)}">${escapeHtml(stats.patients_total)}</span></h2>
        ${genderChart(stats)}
        ${countList("Appointments", stats.appointments_by_status, "status")}
        ${countList("Chosen diagnoses", stats.diagnoses_by_disease, "disease")}
      </section>`
    : `<section class="card"><p class="empty-state">Statistics are available to practitioner accounts.</p></section>`;
  return `
    ${statsBlock}
    <section class="card">
      <h2>Patient list</h2>
      ${patientRows(patients)}
      <h3>New patient</h3>
      <form id="new-patient-form" class="inline-form">
        <label>Name <input name="name" required></label>
        <label>Age <input name="age" type="number" min="0" max="150" required></label>
        <label>Gender
          <select name="gender">
            <option value="female">female</option>
            <option value="male">male</option>
            <option value="other">other</option>
          </select>
        </label>
        <button type="submit">Add patient</button>
      </form>
    </section>`;
}
