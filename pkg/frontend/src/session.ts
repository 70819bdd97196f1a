/**
 * Login session kept in localStorage. The token is forwarded to the API
 * client only; views never receive it, so it cannot leak into markup.
 */

import type { Role } from "./api.js";

const SESSION_KEY = "unani_cdss_session";

export interface SessionState {
  token: string;
  accountId: string;
  role: Role;
  activePatient?: string;
}

export function loadSession(): SessionState | null {
  const raw = localStorage.getItem(SESSION_KEY);
  if (!raw) return null;
  try {
    return JSON.parse(raw) as SessionState;
  } catch {
    localStorage.removeItem(SESSION_KEY);
    return null;
  }
}

export function saveSession(session: SessionState): void {
  localStorage.setItem(SESSION_KEY, JSON.stringify(session));
}

export function clearSession(): void {
  localStorage.removeItem(SESSION_KEY);
}
