export type Route =
  | { view: "login" }
  | { view: "dashboard" }
  | { view: "patient"; id: string }
  | { view: "report"; id: string };

export function parseRoute(hash: string): Route {
  const path = hash.replace(/^#/, "");
  const patient = path.match(/^\/patients\/([^/]+)$/);
  if (patient) return { view: "patient", id: decodeURIComponent(patient[1] as string) };
  const report = path.match(/^\/reports\/([^/]+)$/);
  if (report) return { view: "report", id: decodeURIComponent(report[1] as string) };
  if (path === "/login") return { view: "login" };
  return { view: "dashboard" };
}
