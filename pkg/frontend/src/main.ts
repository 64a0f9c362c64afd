/**
 * Page bootstrap: upload, stage grid, controls, annotation and export.
 */

import { ServiceClient, StageName } from './api.js'
import { AnnotationSet, RegionLabel } from './annotate.js'
import { ParamControls } from './controls.js'
import { Tuner } from './state.js'
import { StageViewer } from './viewer.js'

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function banner(message: string): void {
  const box = el<HTMLDivElement>('banner')
  box.textContent = message
  box.hidden = message === ''
}

export function boot(): void {
  const client = new ServiceClient('')
  const tuner = new Tuner(client)
  const viewer = new StageViewer(client, el('stages'), {
    onError: (stage, message) => banner(`${stage}: ${message}`),
  })
  const controls = new ParamControls(tuner, el('controls'))
  let annotations: AnnotationSet | null = null
  let imageName = 'map'

  tuner.on('stagesChanged', (changed, summary) => {
    banner('')
    el<HTMLSpanElement>('summary').textContent =
      `${summary.component_count} components, ${summary.foreground_area} px, ` +
      `J=${summary.j_m.toFixed(2)} (${summary.iterations} it)`
    void viewer.refresh(changed)
    if (tuner.session) {
      const link = el<HTMLAnchorElement>('export')
      link.href = client.exportUrl(tuner.session.id)
      link.hidden = false
    }
  })
  tuner.on('serviceError', (message) => banner(message))
  tuner.on('fieldError', () => {
    /* surfaced inline by ParamControls */
  })

  el<HTMLInputElement>('upload').addEventListener('change', async (event) => {
    const input = event.target as HTMLInputElement
    const file = input.files?.[0]
    if (!file) return
    imageName = file.name.replace(/\.[^.]+$/, '')
    try {
      const info = await tuner.upload(file)
      viewer.bind(info.id)
      controls.syncBounds()
      controls.reflect(info.params)
      annotations = new AnnotationSet(info.width, info.height)
      await tuner.run() // defaults may fail (e.g. K too high); banner + retune
    } catch (err) {
      banner(err instanceof Error ? err.message : String(err))
    }
  })

  // annotation: click twice on the original pane to place a labeled box
  let pendingCorner: [number, number] | null = null
  el('stages').addEventListener('click', (event) => {
    if (!annotations) return
    const target = event.target as HTMLElement
    if (target.tagName !== 'CANVAS') return
    const pane = target.closest('figure')
    if (!pane || pane.querySelector('figcaption')?.textContent !== 'i_rgb') return
    const rect = target.getBoundingClientRect()
    const [ix, iy] = viewer.transform.toImage(
      event.clientX - rect.left,
      event.clientY - rect.top,
    )
    if (!pendingCorner) {
      pendingCorner = [ix, iy]
      return
    }
    const label = (el<HTMLSelectElement>('annotation-label').value || 'text') as RegionLabel
    const warning = annotations.add(pendingCorner[0], pendingCorner[1], ix, iy, label)
    pendingCorner = null
    if (warning) banner(warning)
    el<HTMLSpanElement>('annotation-count').textContent = String(annotations.count)
  })

  el<HTMLButtonElement>('annotation-download').addEventListener('click', () => {
    if (!annotations) return
    const blob = new Blob([annotations.toJson(imageName)], { type: 'application/json' })
    const a = document.createElement('a')
    a.href = URL.createObjectURL(blob)
    a.download = `${imageName}.truth.json`
    a.click()
    URL.revokeObjectURL(a.href)
  })
}

if (typeof document !== 'undefined' && document.getElementById('stages')) {
  boot()
}
