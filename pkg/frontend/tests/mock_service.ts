/**
 * In-memory stand-in for the tuning service, mirroring its contract:
 * fingerprint-style stage dependencies, ETags, 422 field errors. Used to
 * test the client/state machinery without a network or a browser.
 */

import { PatchReport, PipelineParams, RunSummary, StageName, STAGES } from '../src/api.js'

export const DEFAULT_PARAMS: PipelineParams = {
  fcm: { k: 3, fuzzifier: 2.0, epsilon: 1e-4, max_iterations: 100, seed: 0 },
  selection: 'darkest',
  denoise_window: 3,
  se: { width: 3, height: 3, hits: [[0, 0], [0, 1], [0, -1], [1, 0], [-1, 0], [1, 1], [1, -1], [-1, 1], [-1, -1]] },
  dilate_iterations: 1,
  connectivity: 8,
  area_threshold: 400,
  grid: { block: 3, passes: [3], sliding: false },
  cc_grid_repeats: null,
  bg_color: 255,
}

// which stages each top-level param change invalidates (mirrors the service)
const FIRST_STALE: Record<string, StageName> = {
  denoise_window: 'i_gray',
  fcm: 'i_mask',
  selection: 'i_mask',
  se: 'i_d',
  dilate_iterations: 'i_d',
  connectivity: 'i_mcc',
  area_threshold: 'i_mcc',
  grid: 'i_o',
  cc_grid_repeats: 'i_mcc',
  bg_color: 'i_f',
}

export interface LoggedRequest {
  method: string
  path: string
  body?: unknown
}

export class MockService {
  params: PipelineParams
  ran = false
  readonly log: LoggedRequest[] = []
  readonly stageVersions = new Map<StageName, number>()
  readonly width: number
  readonly height: number

  constructor(width = 600, height = 400) {
    this.width = width
    this.height = height
    this.params = structuredClone(DEFAULT_PARAMS)
    for (const s of STAGES) this.stageVersions.set(s, 1)
  }

  get patchCount(): number {
    return this.log.filter((r) => r.method === 'PATCH').length
  }

  /** fetch-compatible entry point. */
  fetch = async (input: string | URL | Request, init?: RequestInit): Promise<Response> => {
    const url = typeof input === 'string' ? input : input.toString()
    const method = init?.method ?? 'GET'
    const path = url.replace(/^https?:\/\/[^/]+/, '')
    // only params patches carry JSON; uploads are raw image bytes
    const body = typeof init?.body === 'string' ? JSON.parse(init.body) : undefined
    this.log.push({ method, path, body })

    if (method === 'POST' && path === '/sessions') {
      return json(201, {
        id: 'mock-session',
        width: this.width,
        height: this.height,
        params: this.params,
      })
    }
    if (method === 'PATCH' && path.endsWith('/params')) {
      return this.patch(body as Record<string, unknown>)
    }
    if (method === 'POST' && path.endsWith('/run')) {
      this.ran = true
      return json(200, this.report([...STAGES]))
    }
    const stageMatch = path.match(/\/stages\/(\w+)\.png$/)
    if (method === 'GET' && stageMatch) {
      const stage = stageMatch[1] as StageName
      if (!STAGES.includes(stage)) return json(404, { error: `unknown stage ${stage}` })
      const etag = `${stage}-v${this.stageVersions.get(stage)}`
      const ifNoneMatch = headerOf(init, 'If-None-Match')
      if (ifNoneMatch === etag) {
        return new Response(null, { status: 304, headers: { ETag: etag } })
      }
      return new Response(new Blob([`png:${etag}`]), {
        status: 200,
        headers: { ETag: etag, 'Content-Type': 'image/png' },
      })
    }
    return json(404, { error: `no route for ${method} ${path}` })
  }

  private patch(body: Record<string, unknown>): Response {
    const limit = this.width * this.height
    if ('area_threshold' in body) {
      const t = body.area_threshold as number
      if (!(t > 0 && t < limit)) {
        return json(422, {
          error: `area_threshold must satisfy 0 < T < ${limit} (width*height), got ${t}`,
          field: 'area_threshold',
        })
      }
    }
    for (const key of Object.keys(body)) {
      if (!(key in this.params)) {
        return json(422, { error: 'unknown config field', field: key })
      }
    }
    const firstStale = this.ran
      ? Object.keys(body)
          .map((k) => STAGES.indexOf(FIRST_STALE[k] ?? 'i_f'))
          .reduce((a, b) => Math.min(a, b), STAGES.length)
      : 0
    this.params = { ...this.params, ...(body as Partial<PipelineParams>) }
    if ('fcm' in body) {
      this.params.fcm = { ...DEFAULT_PARAMS.fcm, ...(body.fcm as object) }
    }
    this.ran = true
    const changed = STAGES.slice(firstStale) as StageName[]
    for (const s of changed) {
      this.stageVersions.set(s, (this.stageVersions.get(s) ?? 0) + 1)
    }
    return json(200, this.report(changed))
  }

  private report(changed: StageName[]): PatchReport {
    const summary: RunSummary = {
      component_count: 12,
      foreground_area: 5390,
      j_m: 0.0,
      iterations: 2,
      converged: true,
    }
    return { changed, params: this.params, summary }
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}

function headerOf(init: RequestInit | undefined, name: string): string | null {
  const headers = init?.headers
  if (!headers) return null
  if (headers instanceof Headers) return headers.get(name)
  if (Array.isArray(headers)) {
    const hit = headers.find(([k]) => k.toLowerCase() === name.toLowerCase())
    return hit ? hit[1] : null
  }
  const record = headers as Record<string, string>
  for (const key of Object.keys(record)) {
    if (key.toLowerCase() === name.toLowerCase()) return record[key]
  }
  return null
}
