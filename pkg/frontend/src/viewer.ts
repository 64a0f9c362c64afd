/**
 * Stage viewer: 8 panes with synchronized zoom/pan and ETag-aware refresh.
 *
 * The refresh planner and view transform are DOM-free so they can be tested
 * directly; StageViewer owns the canvases and applies them.
 */

import { ServiceClient, StageName, STAGES } from './api.js'

/** Decides which panes to re-fetch after a recompute report. */
export class RefreshPlanner {
  private readonly etags = new Map<StageName, string>()

  noteEtag(stage: StageName, etag: string): void {
    this.etags.set(stage, etag)
  }

  etagOf(stage: StageName): string | undefined {
    return this.etags.get(stage)
  }

  /**
   * Panes worth re-fetching: the ones the server reports as recomputed plus
   * any never fetched at all. Unchanged panes keep their cached bitmap.
   */
  plan(changed: StageName[], visible: StageName[] = [...STAGES]): StageName[] {
    const changedSet = new Set(changed)
    return visible.filter((s) => changedSet.has(s) || !this.etags.has(s))
  }
}

/** Shared pan/zoom transform; zooming keeps the cursor's image point fixed. */
export class ViewTransform {
  scale = 1
  offsetX = 0
  offsetY = 0

  constructor(
    readonly minScale = 0.25,
    readonly maxScale = 32,
  ) {}

  zoomAt(cursorX: number, cursorY: number, factor: number): void {
    const next = Math.min(this.maxScale, Math.max(this.minScale, this.scale * factor))
    const applied = next / this.scale
    // keep the image point under the cursor stationary on screen
    this.offsetX = cursorX - (cursorX - this.offsetX) * applied
    this.offsetY = cursorY - (cursorY - this.offsetY) * applied
    this.scale = next
  }

  panBy(dx: number, dy: number): void {
    this.offsetX += dx
    this.offsetY += dy
  }

  toImage(screenX: number, screenY: number): [number, number] {
    return [(screenX - this.offsetX) / this.scale, (screenY - this.offsetY) / this.scale]
  }

  toScreen(imageX: number, imageY: number): [number, number] {
    return [imageX * this.scale + this.offsetX, imageY * this.scale + this.offsetY]
  }

  reset(): void {
    this.scale = 1
    this.offsetX = 0
    this.offsetY = 0
  }
}

export interface PaneHooks {
  onEnlarge?: (stage: StageName) => void
  onError?: (stage: StageName, message: string) => void
}

/** DOM pane grid; all panes share one ViewTransform. */
export class StageViewer {
  readonly planner = new RefreshPlanner()
  readonly transform = new ViewTransform()
  private readonly bitmaps = new Map<StageName, ImageBitmap>()
  private readonly canvases = new Map<StageName, HTMLCanvasElement>()
  private sessionId: string | null = null

  constructor(
    private readonly client: ServiceClient,
    private readonly container: HTMLElement,
    private readonly hooks: PaneHooks = {},
  ) {
    for (const stage of STAGES) {
      const pane = document.createElement('figure')
      pane.className = 'stage-pane'
      const canvas = document.createElement('canvas')
      canvas.width = 300
      canvas.height = 200
      const caption = document.createElement('figcaption')
      caption.textContent = stage
      pane.append(canvas, caption)
      canvas.addEventListener('dblclick', () => this.hooks.onEnlarge?.(stage))
      this.attachNavigation(canvas)
      this.container.appendChild(pane)
      this.canvases.set(stage, canvas)
    }
  }

  bind(sessionId: string): void {
    this.sessionId = sessionId
    this.bitmaps.clear()
  }

  /** Re-fetch exactly the panes the recompute touched; 304s are free. */
  async refresh(changed: StageName[]): Promise<StageName[]> {
    if (!this.sessionId) return []
    const targets = this.planner.plan(changed)
    const fetched: StageName[] = []
    await Promise.all(
      targets.map(async (stage) => {
        try {
          const r = await this.client.fetchStage(
            this.sessionId as string,
            stage,
            this.planner.etagOf(stage),
          )
          this.planner.noteEtag(stage, r.etag)
          if (r.status === 200 && r.blob) {
            this.bitmaps.set(stage, await createImageBitmap(r.blob))
            fetched.push(stage)
          }
        } catch (err) {
          this.hooks.onError?.(stage, err instanceof Error ? err.message : String(err))
        }
      }),
    )
    this.renderAll()
    return fetched
  }

  renderAll(): void {
    for (const stage of STAGES) this.render(stage)
  }

  private render(stage: StageName): void {
    const canvas = this.canvases.get(stage)
    const bitmap = this.bitmaps.get(stage)
    if (!canvas) return
    const ctx = canvas.getContext('2d')
    if (!ctx) return
    ctx.clearRect(0, 0, canvas.width, canvas.height)
    if (!bitmap) return
    ctx.imageSmoothingEnabled = false // binary masks stay crisp when zoomed
    ctx.setTransform(
      this.transform.scale, 0, 0, this.transform.scale,
      this.transform.offsetX, this.transform.offsetY,
    )
    ctx.drawImage(bitmap, 0, 0)
    ctx.setTransform(1, 0, 0, 1, 0, 0)
  }

  private attachNavigation(canvas: HTMLCanvasElement): void {
    canvas.addEventListener('wheel', (event) => {
      event.preventDefault()
      const rect = canvas.getBoundingClientRect()
      const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2
      this.transform.zoomAt(event.clientX - rect.left, event.clientY - rect.top, factor)
      this.renderAll() // panes stay in lockstep
    })
    let dragging = false
    let lastX = 0
    let lastY = 0
    canvas.addEventListener('pointerdown', (event) => {
      dragging = true
      lastX = event.clientX
      lastY = event.clientY
      canvas.setPointerCapture(event.pointerId)
    })
    canvas.addEventListener('pointermove', (event) => {
      if (!dragging) return
      this.transform.panBy(event.clientX - lastX, event.clientY - lastY)
      lastX = event.clientX
      lastY = event.clientY
      this.renderAll()
    })
    canvas.addEventListener('pointerup', () => {
      dragging = false
    })
  }
}
