import { escapeHtml } from "../render.js";

export function loginView(notice?: string): string {
  const banner = notice ? `<p class="notice">${escapeHtml(notice)}</p>` : "";
  return `
    <section class="card narrow">
      <h2>Sign in</h2>
      ${banner}
      <form id="login-form">
        <label>Username <input name="username" required minlength="3"></label>
        <label>Password <input name="password" type="password" required minlength="8"></label>
        <button type="submit">Sign in</button>
      </form>
    </section>
    <section class="card narrow">
      <h2>Create account</h2>
      <form id="signup-form">
        <label>Username <input name="username" required minlength="3"></label>
        <label>Password <input name="password" type="password" required minlength="8"></label>
        <label>Role
          <select name="role">
            <option value="practitioner">practitioner</option>
            <option value="patient">patient</option>
          </select>
        </label>
        <button type="submit">Register and sign in</button>
      </form>
    </section>`;
}
