/**
 * Typed client for the tuning service. The UI never computes pipeline math:
 * every pixel it shows comes from these endpoints.
 */

export const STAGES = [
  'i_rgb', 'i_gray', 'i_mask', 'i_e', 'i_d', 'i_mcc', 'i_o', 'i_f',
] as const

export type StageName = (typeof STAGES)[number]

export interface FcmParams {
  k: number
  fuzzifier: number
  epsilon: number
  max_iterations: number
  seed: number
}

export interface GridParams {
  block: number
  passes: number[]
  sliding: boolean
}

export interface StructuringElementParams {
  width: number
  height: number
  hits: [number, number][]
}

export interface PipelineParams {
  fcm: FcmParams
  selection: string | number
  denoise_window: number
  se: StructuringElementParams
  dilate_iterations: number
  connectivity: number
  area_threshold: number
  grid: GridParams
  cc_grid_repeats: [number, GridParams][] | null
  bg_color: number
}

export type ParamsPatch = Partial<Omit<PipelineParams, 'fcm'>> & { fcm?: Partial<FcmParams> }

export interface RunSummary {
  component_count: number
  foreground_area: number
  j_m: number
  iterations: number
  converged: boolean
}

export interface SessionInfo {
  id: string
  width: number
  height: number
  params: PipelineParams
}

export interface PatchReport {
  changed: StageName[]
  params: PipelineParams
  summary: RunSummary
}

export interface StageResponse {
  status: 200 | 304
  etag: string
  blob: Blob | null
}

/** 422 from the service: points at the offending config field. */
export class FieldError extends Error {
  constructor(
    readonly field: string,
    message: string,
  ) {
    super(message)
    this.name = 'FieldError'
  }
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message)
    this.name = 'ServiceError'
  }
}

async function errorOf(response: Response): Promise<ServiceError | FieldError> {
  let message = response.statusText
  let field: string | null = null
  try {
    const body = (await response.json()) as { error?: string; field?: string }
    if (body.error) message = body.error
    if (body.field) field = body.field
  } catch {
    /* non-JSON error body */
  }
  if (response.status === 422 && field !== null) return new FieldError(field, message)
  return new ServiceError(response.status, message)
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init)
    if (!response.ok && response.status !== 304) throw await errorOf(response)
    return response
  }

  async createSession(image: BodyInit): Promise<SessionInfo> {
    const r = await this.request('/sessions', { method: 'POST', body: image })
    return (await r.json()) as SessionInfo
  }

  async getSession(id: string): Promise<SessionInfo & { ran: boolean }> {
    const r = await this.request(`/sessions/${id}`)
    return (await r.json()) as SessionInfo & { ran: boolean }
  }

  async patchParams(id: string, patch: ParamsPatch): Promise<PatchReport> {
    const r = await this.request(`/sessions/${id}/params`, {
      method: 'PATCH',
      body: JSON.stringify(patch),
    })
    return (await r.json()) as PatchReport
  }

  async run(id: string): Promise<PatchReport> {
    const r = await this.request(`/sessions/${id}/run`, { method: 'POST' })
    return (await r.json()) as PatchReport
  }

  stageUrl(id: string, stage: StageName): string {
    return `${this.baseUrl}/sessions/${id}/stages/${stage}.png`
  }

  exportUrl(id: string): string {
    return `${this.baseUrl}/sessions/${id}/export`
  }

  /** Conditional stage fetch; a matching ETag costs no image transfer. */
  async fetchStage(id: string, stage: StageName, etag?: string): Promise<StageResponse> {
    const headers: Record<string, string> = {}
    if (etag) headers['If-None-Match'] = etag
    const r = await this.request(this.stagePath(id, stage), { headers })
    const newTag = r.headers.get('ETag') ?? ''
    if (r.status === 304) return { status: 304, etag: newTag || etag || '', blob: null }
    return { status: 200, etag: newTag, blob: await r.blob() }
  }

  private stagePath(id: string, stage: StageName): string {
    return `/sessions/${id}/stages/${stage}.png`
  }
}
