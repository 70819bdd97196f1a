/**
 * Typed client for the unani-cdss REST service (/api/v1).
 * The base URL is configurable so the app can run against any host.
 */

export type Role = "practitioner" | "patient";
export type Gender = "female" | "male" | "other";
export type Engine = "rules" | "tree" | "text";

export interface Account {
  id: string;
  username: string;
  role: Role;
  created_at: string;
}

export interface LoginResponse {
  token: string;
  account_id: string;
  role: Role;
  expires_at: string;
}

export interface SymptomEntry {
  timestamp: string;
  raw_text: string;
  resolved: string[];
  unresolved: string[];
}

export interface SymptomPostResponse extends SymptomEntry {
  patient_id: string;
  warnings: string[];
}

export interface Patient {
  id: string;
  name: string;
  age: number;
  gender: Gender;
  symptom_entries: SymptomEntry[];
  assigned_practitioner: string | null;
  created_at: string;
}

export interface MatchedAtom {
  predicate: string;
  constant: string;
}

export interface DifferentialEntry {
  disease_id: string;
  score: number;
  matched: MatchedAtom[];
  missing: string[];
  fired_rules: string[];
}

export interface Differential {
  entries: DifferentialEntry[];
  warnings: string[];
}

export interface PlanItem {
  id: string;
  label: string;
  provenance: string[];
}

export interface TreatmentPlan {
  principle: PlanItem[];
  regimental: PlanItem[];
  prevention: PlanItem[];
}

export interface Report {
  id: string;
  patient_id: string;
  engine: Engine;
  params: {
    threshold: number;
    strict_vocabulary: boolean;
    kind_weights: Record<string, number>;
  };
  differential: Differential;
  chosen_disease: string | null;
  plan: TreatmentPlan | null;
  created_at: string;
}

export interface DashboardStats {
  patients_total: number;
  patients_by_gender: Record<string, number>;
  appointments_by_status: Record<string, number>;
  diagnoses_by_disease: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

let apiBase = "";
let authToken: string | null = null;

export function configureApi(base: string): void {
  apiBase = base.replace(/\/+$/, "");
}

export function setAuthToken(token: string | null): void {
  authToken = token;
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  const headers: Record<string, string> = {};
  if (body !== undefined) headers["Content-Type"] = "application/json";
  if (authToken) headers["Authorization"] = `Bearer ${authToken}`;
  const res = await fetch(`${apiBase}/api/v1${path}`, {
    method,
    headers,
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  if (!res.ok) {
    let code = "http_error";
    let message = `request failed with status ${res.status}`;
    try {
      const envelope = (await res.json()) as { error: { code: string; message: string } };
      code = envelope.error.code;
      message = envelope.error.message;
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ApiError(res.status, code, message);
  }
  return res.json() as Promise<T>;
}

export const api = {
  signup(username: string, password: string, role: Role): Promise<Account> {
    return request("POST", "/auth/signup", { username, password, role });
  },

  login(username: string, password: string): Promise<LoginResponse> {
    return request("POST", "/auth/login", { username, password });
  },

  listPatients(): Promise<Patient[]> {
    return request("GET", "/patients");
  },

  getPatient(patientId: string): Promise<Patient> {
    return request("GET", `/patients/${patientId}`);
  },

  createPatient(name: string, age: number, gender: Gender): Promise<Patient> {
    return request("POST", "/patients", { name, age, gender });
  },

  addSymptoms(patientId: string, text: string): Promise<SymptomPostResponse> {
    return request("POST", `/patients/${patientId}/symptoms`, { text });
  },

  diagnose(patientId: string, engine: Engine): Promise<Report> {
    return request("POST", `/patients/${patientId}/diagnose`, { engine });
  },

  getReport(reportId: string): Promise<Report> {
    return request("GET", `/reports/${reportId}`);
  },

  choose(reportId: string, diseaseId: string): Promise<Report> {
    return request("POST", `/reports/${reportId}/choose`, { disease_id: diseaseId });
  },

  dashboard(): Promise<DashboardStats> {
    return request("GET", "/stats/dashboard");
  },
};
