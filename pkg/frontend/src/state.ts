/**
 * Tuner session state: current params, per-stage ETags, and the debounced
 * patch loop. Emits which panes changed after every server response so the
 * viewer refreshes exactly those.
 */

import {
  FieldError,
  ParamsPatch,
  PatchReport,
  PipelineParams,
  RunSummary,
  ServiceClient,
  SessionInfo,
  StageName,
} from './api.js'
import { mergePatches, PatchQueue } from './coalesce.js'

export interface TunerEvents {
  stagesChanged: (stages: StageName[], summary: RunSummary) => void
  paramsApplied: (params: PipelineParams) => void
  fieldError: (field: string, message: string) => void
  serviceError: (message: string) => void
}

export class Tuner {
  session: SessionInfo | null = null
  params: PipelineParams | null = null
  summary: RunSummary | null = null
  readonly etags = new Map<StageName, string>()
  selectedPair: [StageName, StageName] = ['i_rgb', 'i_f']

  private readonly queue: PatchQueue<ParamsPatch>
  private readonly listeners: { [K in keyof TunerEvents]: TunerEvents[K][] } = {
    stagesChanged: [],
    paramsApplied: [],
    fieldError: [],
    serviceError: [],
  }

  constructor(
    private readonly client: ServiceClient,
    debounceMs = 250,
  ) {
    this.queue = new PatchQueue<ParamsPatch>(
      (patch) => this.applyPatch(patch),
      (pending, next) => mergePatches(pending as Record<string, unknown>, next as Record<string, unknown>) as ParamsPatch,
      debounceMs,
      (err) => this.routeError(err),
    )
  }

  get patchesSent(): number {
    return this.queue.sentCount
  }

  on<K extends keyof TunerEvents>(event: K, handler: TunerEvents[K]): void {
    this.listeners[event].push(handler)
  }

  private emit<K extends keyof TunerEvents>(event: K, ...args: Parameters<TunerEvents[K]>): void {
    for (const handler of this.listeners[event]) {
      ;(handler as (...a: Parameters<TunerEvents[K]>) => void)(...args)
    }
  }

  async upload(image: BodyInit): Promise<SessionInfo> {
    this.session = await this.client.createSession(image)
    this.params = this.session.params
    this.etags.clear()
    return this.session
  }

  /** Pixel count of the current image; the threshold must stay below it. */
  get pixelLimit(): number {
    if (!this.session) return 0
    return this.session.width * this.session.height
  }

  /** Queue a debounced parameter change (rapid calls coalesce). */
  update(patch: ParamsPatch): void {
    this.queue.push(patch)
  }

  flush(): void {
    this.queue.flush()
  }

  /** Run with current params (initial compute after upload). */
  async run(): Promise<PatchReport> {
    if (!this.session) throw new Error('no session')
    const report = await this.client.run(this.session.id)
    this.accept(report)
    return report
  }

  private async applyPatch(patch: ParamsPatch): Promise<void> {
    if (!this.session) throw new Error('no session')
    const report = await this.client.patchParams(this.session.id, patch)
    this.accept(report)
  }

  private accept(report: PatchReport): void {
    this.params = report.params
    this.summary = report.summary
    this.emit('paramsApplied', report.params)
    this.emit('stagesChanged', report.changed, report.summary)
  }

  private routeError(err: unknown): void {
    if (err instanceof FieldError) {
      this.emit('fieldError', err.field, err.message)
    } else {
      this.emit('serviceError', err instanceof Error ? err.message : String(err))
    }
  }
}
