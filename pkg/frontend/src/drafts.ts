/** Draft autosave keyed by task id. Sessions over 45-minute transcripts are
 * long; partial work must survive a reload. Cleared on successful submit. */

export interface DraftStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface DraftEnvelope<T> {
  taskId: string;
  revision: number;
  idempotencyKey: string;
  data: T;
}

const PREFIX = "tn-eval.draft.";

export class Drafts {
  constructor(private readonly store: DraftStore) {}

  save<T>(envelope: DraftEnvelope<T>): void {
    this.store.setItem(
      PREFIX + envelope.taskId,
      JSON.stringify(envelope),
    );
  }

  load<T>(taskId: string): DraftEnvelope<T> | null {
    const raw = this.store.getItem(PREFIX + taskId);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as DraftEnvelope<T>;
    } catch {
      this.store.removeItem(PREFIX + taskId);
      return null;
    }
  }

  clear(taskId: string): void {
    this.store.removeItem(PREFIX + taskId);
  }
}

export class MemoryStore implements DraftStore {
  private readonly map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export function newIdempotencyKey(): string {
  const bytes = new Uint8Array(16);
  if (typeof crypto !== "undefined" && crypto.getRandomValues) {
    crypto.getRandomValues(bytes);
  } else {
    for (let i = 0; i < bytes.length; i++) {
      bytes[i] = Math.floor(Math.random() * 256);
    }
  }
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}
