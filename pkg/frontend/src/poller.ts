/** Session polling with one in-flight request and state-aware cadence:
 * 500 ms while any entry is processing, 3 s otherwise. */

import type { ApiClient } from "./api.js";
import type { SessionView } from "./types.js";

export const BUSY_INTERVAL_MS = 500;
export const IDLE_INTERVAL_MS = 3000;

export class SessionPoller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private sessionId: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onUpdate: (view: SessionView) => void,
  ) {}

  watch(sessionId: string): void {
    this.sessionId = sessionId;
    this.kick();
  }

  stop(): void {
    this.sessionId = null;
    if (this.timer) clearTimeout(this.timer);
    this.timer = null;
  }

  /** Poll now (button handlers call this to re-sync after a mutation or 409). */
  kick(): void {
    if (this.timer) clearTimeout(this.timer);
    this.timer = null;
    void this.tick();
  }

  private schedule(delay: number): void {
    if (this.timer) clearTimeout(this.timer);
    this.timer = setTimeout(() => void this.tick(), delay);
  }

  private async tick(): Promise<void> {
    if (!this.sessionId || this.inFlight) return;
    this.inFlight = true;
    let delay = IDLE_INTERVAL_MS;
    try {
      const view = await this.api.getSession(this.sessionId);
      this.onUpdate(view);
      if (view.entries.some((e) => e.state === "processing")) delay = BUSY_INTERVAL_MS;
    } catch {
      // transient fetch failure; retry at the idle cadence
    } finally {
      this.inFlight = false;
      if (this.sessionId) this.schedule(delay);
    }
  }
}
