/**
 * Debounced, single-in-flight patch queue.
 *
 * Parameter edits are merged into one pending patch and sent after a quiet
 * period (rapid slider drags coalesce into a single request). While a
 * request is in flight, further edits keep merging; at most one PATCH is
 * ever outstanding, and a queued patch is sent once the current one lands.
 */

export type Merge<T> = (pending: T, next: T) => T

export class PatchQueue<T> {
  private pending: T | null = null
  private timer: ReturnType<typeof setTimeout> | null = null
  private inFlight = false
  private sends = 0

  constructor(
    private readonly send: (patch: T) => Promise<void>,
    private readonly merge: Merge<T>,
    private readonly delayMs = 250,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  /** Total number of requests actually sent (visible for tests/status). */
  get sentCount(): number {
    return this.sends
  }

  get hasPending(): boolean {
    return this.pending !== null
  }

  push(patch: T): void {
    this.pending = this.pending === null ? patch : this.merge(this.pending, patch)
    if (this.inFlight) return // will be flushed when the current send lands
    this.restartTimer()
  }

  /** Send the pending patch immediately (e.g. on blur/enter). */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer)
      this.timer = null
    }
    if (!this.inFlight) void this.dispatch()
  }

  private restartTimer(): void {
    if (this.timer !== null) clearTimeout(this.timer)
    this.timer = setTimeout(() => {
      this.timer = null
      void this.dispatch()
    }, this.delayMs)
  }

  private async dispatch(): Promise<void> {
    if (this.inFlight || this.pending === null) return
    const patch = this.pending
    this.pending = null
    this.inFlight = true
    this.sends += 1
    try {
      await this.send(patch)
    } catch (err) {
      this.onError(err)
    } finally {
      this.inFlight = false
      if (this.pending !== null) this.restartTimer()
    }
  }
}

/** Deep-ish merge for params patches: nested objects merge, scalars replace. */
export function mergePatches<T extends Record<string, unknown>>(pending: T, next: T): T {
  const out: Record<string, unknown> = { ...pending }
  for (const [key, value] of Object.entries(next)) {
    const previous = out[key]
    if (
      value !== null &&
      previous !== null &&
      typeof value === 'object' &&
      typeof previous === 'object' &&
      !Array.isArray(value) &&
      !Array.isArray(previous)
    ) {
      out[key] = { ...(previous as object), ...(value as object) }
    } else {
      out[key] = value
    }
  }
  return out as T
}
