/** View-state controller: polls the session, fetches query batches once per
 * round, posts labels, and keeps the metrics history current. Pure logic,
 * no DOM; rendering subscribes via onChange.
 */

import { ApiClient, ApiError } from "./api.js";
import type { RoundDoc, SessionDoc, UiQueryItem } from "./types.js";

export type ViewKind = "connecting" | "training" | "labeling" | "finished";

export interface AppState {
  view: ViewKind;
  session: SessionDoc | null;
  items: UiQueryItem[];
  /** round the current items belong to; queries are fetched once per round */
  queryRound: number | null;
  focus: number;
  metrics: RoundDoc[];
  banner: string | null;
  pollMs: number;
}

export const POLL_MS = 1000;
export const POLL_MAX_MS = 8000;

export class AnnotationController {
  readonly state: AppState = {
    view: "connecting",
    session: null,
    items: [],
    queryRound: null,
    focus: 0,
    metrics: [],
    banner: null,
    pollMs: POLL_MS,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: AppState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  /** One poll tick. Never throws; failures set the connection banner and
   * back off, success restores the 1s interval. */
  async poll(): Promise<void> {
    const s = this.state;
    let session: SessionDoc;
    try {
      session = await this.api.getSession();
    } catch (err) {
      s.banner = err instanceof Error ? err.message : String(err);
      s.pollMs = Math.min(s.pollMs * 2, POLL_MAX_MS);
      this.emit();
      return;
    }
    s.banner = null;
    s.pollMs = POLL_MS;
    s.session = session;

    if (session.status === "awaiting_labels") {
      if (s.queryRound !== session.round) {
        try {
          const docs = await this.api.getQueries();
          s.items = docs.map((doc) => ({ doc, chosen: null, error: null }));
          s.queryRound = session.round;
          s.focus = 0;
        } catch (err) {
          // e.g. the round closed between the two requests; next poll resolves
          if (!(err instanceof ApiError && err.status === 409)) {
            s.banner = err instanceof Error ? err.message : String(err);
          }
          this.emit();
          return;
        }
      }
      s.view = "labeling";
    } else if (session.status === "finished") {
      s.view = "finished";
    } else {
      s.view = "training";
      s.items = [];
      s.queryRound = null;
    }

    try {
      s.metrics = await this.api.getMetrics();
    } catch {
      // metrics are cosmetic for this tick; keep the last good history
    }
    this.emit();
  }

  /** Post a label for one item. Re-posting overwrites until the round
   * closes; 4xx errors surface inline and leave the item editable. */
  async choose(index: number, classIndex: number): Promise<void> {
    const s = this.state;
    const item = s.items[index];
    if (!item) return;
    item.error = null;
    try {
      await this.api.postLabel(item.doc.id, classIndex);
    } catch (err) {
      item.error = err instanceof Error ? err.message : String(err);
      this.emit();
      return;
    }
    item.chosen = classIndex;
    if (index === s.focus) this.advanceFocus();
    if (this.labeledCount() === s.items.length && s.items.length > 0) {
      // all b labels in: the engine unblocks, show training immediately
      s.view = "training";
    }
    this.emit();
  }

  /** Label the focused item (keyboard path). */
  chooseFocused(classIndex: number): Promise<void> {
    return this.choose(this.state.focus, classIndex);
  }

  setFocus(index: number): void {
    if (index >= 0 && index < this.state.items.length) {
      this.state.focus = index;
      this.emit();
    }
  }

  labeledCount(): number {
    return this.state.items.filter((it) => it.chosen !== null).length;
  }

  private advanceFocus(): void {
    const s = this.state;
    const n = s.items.length;
    for (let step = 1; step <= n; step++) {
      const i = (s.focus + step) % n;
      if (s.items[i].chosen === null) {
        s.focus = i;
        return;
      }
    }
  }
}
