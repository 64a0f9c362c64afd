/**
 * Parameter controls: threshold slider, grid pass checkboxes, numeric
 * inputs for cluster count / fuzzifier / seed / background. Edits are
 * debounced through the tuner's patch queue; 422 responses surface inline
 * next to the offending control.
 */

import { ParamsPatch, PipelineParams } from './api.js'
import { Tuner } from './state.js'

interface ControlRefs {
  threshold: HTMLInputElement
  thresholdValue: HTMLOutputElement
  grid3: HTMLInputElement
  grid5: HTMLInputElement
  clusters: HTMLInputElement
  fuzzifier: HTMLInputElement
  seed: HTMLInputElement
  bg: HTMLInputElement
  errors: Map<string, HTMLElement>
}

export function gridPassesFrom(grid3: boolean, grid5: boolean): number[] {
  const passes: number[] = []
  if (grid3) passes.push(3)
  if (grid5) passes.push(5)
  return passes
}

export class ParamControls {
  private refs: ControlRefs

  constructor(
    private readonly tuner: Tuner,
    root: HTMLElement,
  ) {
    this.refs = this.build(root)
    this.tuner.on('paramsApplied', (params) => this.reflect(params))
    this.tuner.on('fieldError', (field, message) => this.showError(field, message))
  }

  /** Threshold slider range is (0, width*height) exclusive. */
  syncBounds(): void {
    const limit = this.tuner.pixelLimit
    this.refs.threshold.min = '1'
    this.refs.threshold.max = String(Math.max(1, limit - 1))
  }

  reflect(params: PipelineParams): void {
    this.refs.threshold.value = String(params.area_threshold)
    this.refs.thresholdValue.value = String(params.area_threshold)
    this.refs.grid3.checked = params.grid.passes.includes(3)
    this.refs.grid5.checked = params.grid.passes.includes(5)
    this.refs.clusters.value = String(params.fcm.k)
    this.refs.fuzzifier.value = String(params.fcm.fuzzifier)
    this.refs.seed.value = String(params.fcm.seed)
    this.refs.bg.value = String(params.bg_color)
    this.clearErrors()
  }

  private push(patch: ParamsPatch, field: string): void {
    this.clearError(field)
    this.tuner.update(patch)
  }

  private build(root: HTMLElement): ControlRefs {
    root.innerHTML = `
      <label>area threshold
        <input type="range" name="area_threshold" min="1" max="1" step="1">
        <output name="area_threshold_value">-</output>
        <small class="field-error" data-field="area_threshold"></small>
      </label>
      <fieldset>
        <legend>grid passes</legend>
        <label><input type="checkbox" name="grid3"> 3x3</label>
        <label><input type="checkbox" name="grid5"> 5x5</label>
        <small class="field-error" data-field="grid"></small>
      </fieldset>
      <label>clusters K <input type="number" name="clusters" min="1" max="8" step="1">
        <small class="field-error" data-field="fcm"></small></label>
      <label>fuzzifier <input type="number" name="fuzzifier" min="1.01" step="0.1">
        <small class="field-error" data-field="fuzzifier"></small></label>
      <label>seed <input type="number" name="seed" step="1">
        <small class="field-error" data-field="seed"></small></label>
      <label>background <input type="number" name="bg" min="0" max="255" step="1">
        <small class="field-error" data-field="bg_color"></small></label>
    `
    const q = <T extends HTMLElement>(sel: string) => root.querySelector(sel) as T
    const refs: ControlRefs = {
      threshold: q('input[name=area_threshold]'),
      thresholdValue: q('output[name=area_threshold_value]'),
      grid3: q('input[name=grid3]'),
      grid5: q('input[name=grid5]'),
      clusters: q('input[name=clusters]'),
      fuzzifier: q('input[name=fuzzifier]'),
      seed: q('input[name=seed]'),
      bg: q('input[name=bg]'),
      errors: new Map(),
    }
    root.querySelectorAll<HTMLElement>('.field-error').forEach((el) => {
      refs.errors.set(el.dataset.field ?? '', el)
    })

    refs.threshold.addEventListener('input', () => {
      refs.thresholdValue.value = refs.threshold.value
      this.push({ area_threshold: Number(refs.threshold.value) }, 'area_threshold')
    })
    const onGrid = () => {
      const passes = gridPassesFrom(refs.grid3.checked, refs.grid5.checked)
      this.push({ grid: { block: passes[0] ?? 3, passes, sliding: false } }, 'grid')
    }
    refs.grid3.addEventListener('change', onGrid)
    refs.grid5.addEventListener('change', onGrid)
    refs.clusters.addEventListener('change', () => {
      this.push({ fcm: { k: Number(refs.clusters.value) } }, 'fcm')
    })
    refs.fuzzifier.addEventListener('change', () => {
      this.push({ fcm: { fuzzifier: Number(refs.fuzzifier.value) } }, 'fuzzifier')
    })
    refs.seed.addEventListener('change', () => {
      this.push({ fcm: { seed: Number(refs.seed.value) } }, 'seed')
    })
    refs.bg.addEventListener('change', () => {
      this.push({ bg_color: Number(refs.bg.value) }, 'bg_color')
    })
    return refs
  }

  private showError(field: string, message: string): void {
    // nested fcm fields report as "fcm"; fall back to the generic slot
    const slot =
      this.refs.errors.get(field) ??
      this.refs.errors.get(field.split('.')[0]) ??
      this.refs.errors.get('area_threshold')
    if (slot) slot.textContent = message
  }

  private clearError(field: string): void {
    const slot = this.refs.errors.get(field)
    if (slot) slot.textContent = ''
  }

  private clearErrors(): void {
    for (const slot of this.refs.errors.values()) slot.textContent = ''
  }
}
