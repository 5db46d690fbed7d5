/** Error banner and transient toasts. The graph view is never blanked on
 * failure; problems surface here while the last good render stays up. */

export function showBanner(container: HTMLElement, message: string): void {
  container.textContent = message;
  container.setAttribute("role", "alert");
  container.classList.add("visible");
}

export function clearBanner(container: HTMLElement): void {
  container.textContent = "";
  container.classList.remove("visible");
}

export function showToast(host: HTMLElement, message: string, ttlMs = 4000): void {
  const toast = document.createElement("div");
  toast.className = "toast";
  toast.setAttribute("role", "status");
  toast.textContent = message;
  host.appendChild(toast);
  setTimeout(() => toast.remove(), ttlMs);
}
