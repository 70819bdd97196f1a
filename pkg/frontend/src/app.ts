import { api, ApiError, configureApi, setAuthToken } from "./api.js";
import type { DashboardStats, Engine, Gender } from "./api.js";
import { clearSession, loadSession, saveSession } from "./session.js";
import type { SessionState } from "./session.js";
import { parseRoute } from "./router.js";
import type { Route } from "./router.js";
import { escapeHtml } from "./render.js";
import { loginView } from "./views/login.js";
import { dashboardView } from "./views/dashboard.js";
import { patientView } from "./views/patient.js";
import type { PatientViewUi } from "./views/patient.js";
import { reportView } from "./views/report.js";

export const API_BASE_KEY = "unani_cdss_api_base";

let root: HTMLElement | null = null;
let renderSeq = 0;
let lastRouteKey = "";
let loginNotice: string | undefined;
let patientUi: PatientViewUi = {};

function routeKey(route: Route): string {
  return route.view === "patient" || route.view === "report"
    ? `${route.view}:${route.id}`
    : route.view;
}

function chrome(inner: string, session: SessionState | null): string {
  const nav = session
    ? `<nav>
        <a href="#/dashboard">Dashboard</a>
        <span class="role-tag">${escapeHtml(session.role)}</span>
        <button type="button" data-action="logout">Sign out</button>
      </nav>`
    : "";
  return `<header><h1>Unani medicine workbench</h1>${nav}</header><main>${inner}</main>`;
}

function errorCard(message: string): string {
  return `<section class="error-card">
    <p class="error-banner">${escapeHtml(message)}</p>
    <a href="#/dashboard">Back to dashboard</a>
  </section>`;
}

async function viewFor(
  route: Exclude<Route, { view: "login" }>,
  session: SessionState,
): Promise<string> {
  if (route.view === "dashboard") {
    let stats: DashboardStats | null = null;
    if (session.role === "practitioner") {
      stats = await api.dashboard();
    }
    const patients = await api.listPatients();
    return dashboardView(stats, patients);
  }
  if (route.view === "patient") {
    const patient = await api.getPatient(route.id);
    return patientView(patient, patientUi);
  }
  const report = await api.getReport(route.id);
  return reportView(report);
}

export async function renderRoute(): Promise<void> {
  if (!root) {
    return;
  }
  const seq = ++renderSeq;
  const route = parseRoute(location.hash);
  const key = routeKey(route);
  if (key !== lastRouteKey) {
    // transient state belongs to one screen; a navigation discards it
    patientUi = {};
    lastRouteKey = key;
  }
  const session = loadSession();
  if (!session && route.view !== "login") {
    location.hash = "#/login";
    return;
  }
  let html: string;
  if (route.view === "login" || !session) {
    html = chrome(loginView(loginNotice), null);
    loginNotice = undefined;
  } else {
    try {
      html = chrome(await viewFor(route, session), session);
    } catch (err) {
      if (handleAuthError(err)) {
        return;
      }
      html = chrome(errorCard(describeError(err)), session);
    }
  }
  if (seq === renderSeq && root) {
    root.innerHTML = html;
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.message;
  }
  if (err instanceof Error) {
    return `The service could not be reached (${err.message}).`;
  }
  return "The service could not be reached.";
}

function handleAuthError(err: unknown): boolean {
  if (err instanceof ApiError && err.status === 401) {
    clearSession();
    setAuthToken(null);
    loginNotice = "Your session has expired; sign in again.";
    navigate("#/login");
    return true;
  }
  return false;
}

export function navigate(hash: string): void {
  if (location.hash === hash) {
    void renderRoute();
  } else {
    location.hash = hash;
  }
}

function startSession(token: string, accountId: string, role: SessionState["role"]): void {
  saveSession({ token, accountId, role });
  setAuthToken(token);
  navigate("#/dashboard");
}

async function submitLogin(form: HTMLFormElement): Promise<void> {
  const data = new FormData(form);
  const res = await api.login(String(data.get("username")), String(data.get("password")));
  startSession(res.token, res.account_id, res.role);
}

async function submitSignup(form: HTMLFormElement): Promise<void> {
  const data = new FormData(form);
  const username = String(data.get("username"));
  const password = String(data.get("password"));
  const role = String(data.get("role")) as SessionState["role"];
  await api.signup(username, password, role);
  const res = await api.login(username, password);
  startSession(res.token, res.account_id, res.role);
}

async function submitNewPatient(form: HTMLFormElement): Promise<void> {
  const data = new FormData(form);
  const patient = await api.createPatient(
    String(data.get("name")),
    Number(data.get("age")),
    String(data.get("gender")) as Gender,
  );
  navigate(`#/patients/${encodeURIComponent(patient.id)}`);
}

async function submitSymptoms(patientId: string, text: string): Promise<void> {
  patientUi = {};
  try {
    const preview = await api.addSymptoms(patientId, text);
    patientUi = { preview };
  } catch (err) {
    if (handleAuthError(err)) {
      return;
    }
    // keep the text so one click can resend it
    patientUi = { retryText: text, errorText: describeError(err) };
  }
  await renderRoute();
}

async function runDiagnosis(patientId: string): Promise<void> {
  if (patientUi.diagnosisPending) {
    return;
  }
  const select = document.getElementById("engine-select") as HTMLSelectElement | null;
  const engine = (select?.value ?? "rules") as Engine;
  patientUi = { ...patientUi, diagnosisPending: true };
  await renderRoute();
  try {
    const report = await api.diagnose(patientId, engine);
    patientUi = {};
    navigate(`#/reports/${encodeURIComponent(report.id)}`);
  } catch (err) {
    if (handleAuthError(err)) {
      return;
    }
    patientUi = { ...patientUi, diagnosisPending: false, errorText: describeError(err) };
    await renderRoute();
  }
}

async function chooseDisease(reportId: string, diseaseId: string): Promise<void> {
  await api.choose(reportId, diseaseId);
  await renderRoute();
}

function onSubmit(event: Event): void {
  const form = event.target as HTMLFormElement;
  event.preventDefault();
  const route = parseRoute(location.hash);
  const task = (async () => {
    if (form.id === "login-form") {
      await submitLogin(form);
    } else if (form.id === "signup-form") {
      await submitSignup(form);
    } else if (form.id === "new-patient-form") {
      await submitNewPatient(form);
    } else if (form.id === "symptoms-form" && route.view === "patient") {
      const field = form.elements.namedItem("text") as HTMLTextAreaElement;
      await submitSymptoms(route.id, field.value);
    }
  })();
  void task.catch((err) => {
    if (!handleAuthError(err) && root) {
      const banner = `<p class="error-banner">${escapeHtml(describeError(err))}</p>`;
      const main = root.querySelector("main");
      if (main) {
        main.insertAdjacentHTML("afterbegin", banner);
      }
    }
  });
}

function onClick(event: Event): void {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) {
    return;
  }
  const action = target.dataset["action"];
  const route = parseRoute(location.hash);
  if (action === "logout") {
    clearSession();
    setAuthToken(null);
    navigate("#/login");
  } else if (action === "remove-chip") {
    // dismissing a chip only tidies the preview; recorded entries are immutable
    target.closest(".chip")?.remove();
  } else if (action === "retry-symptoms" && route.view === "patient") {
    const text = patientUi.retryText ?? "";
    void submitSymptoms(route.id, text);
  } else if (action === "diagnose" && route.view === "patient") {
    void runDiagnosis(route.id);
  } else if (action === "choose" && route.view === "report") {
    const diseaseId = target.dataset["disease"] ?? "";
    void chooseDisease(route.id, diseaseId).catch((err) => {
      if (!handleAuthError(err) && root) {
        const main = root.querySelector("main");
        if (main) {
          main.insertAdjacentHTML(
            "afterbegin",
            `<p class="error-banner">${escapeHtml(describeError(err))}</p>`,
          );
        }
      }
    });
  }
}

export function mountApp(rootEl: HTMLElement): void {
  root = rootEl;
  configureApi(localStorage.getItem(API_BASE_KEY) ?? "");
  setAuthToken(loadSession()?.token ?? null);
  rootEl.addEventListener("submit", onSubmit);
  rootEl.addEventListener("click", onClick);
  window.addEventListener("hashchange", () => {
    void renderRoute();
  });
  void renderRoute();
}
