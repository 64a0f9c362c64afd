/**
 * Ground-truth annotation: draw labeled boxes over the original image and
 * export them as the evaluator's JSON schema:
 *
 *   {image, width, height, regions: [{x0, y0, x1, y1, label}]}
 *
 * Coordinates are inclusive integer pixel positions inside the image.
 */

export type RegionLabel = 'text' | 'non-text'

export interface AnnotationBox {
  x0: number
  y0: number
  x1: number
  y1: number
  label: RegionLabel
}

export interface GroundTruthDoc {
  image: string
  width: number
  height: number
  regions: AnnotationBox[]
}

export class AnnotationSet {
  private readonly boxes: AnnotationBox[] = []

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    if (width < 1 || height < 1) throw new Error('annotation canvas needs positive dimensions')
  }

  get count(): number {
    return this.boxes.length
  }

  list(): readonly AnnotationBox[] {
    return this.boxes
  }

  /**
   * Normalize (sort corners, clamp into bounds, round to integers) and add.
   * Returns a warning string for overlapping duplicates; they are allowed.
   */
  add(x0: number, y0: number, x1: number, y1: number, label: RegionLabel): string | null {
    const box: AnnotationBox = {
      x0: this.clampX(Math.min(x0, x1)),
      y0: this.clampY(Math.min(y0, y1)),
      x1: this.clampX(Math.max(x0, x1)),
      y1: this.clampY(Math.max(y0, y1)),
      label,
    }
    this.boxes.push(box)
    const dup = this.boxes.slice(0, -1).find((b) => overlaps(b, box) && b.label === box.label)
    if (dup) {
      return `box overlaps an existing ${label} region (${dup.x0},${dup.y0},${dup.x1},${dup.y1})`
    }
    return null
  }

  removeAt(index: number): void {
    this.boxes.splice(index, 1)
  }

  clear(): void {
    this.boxes.length = 0
  }

  /** Schema-valid document, also for an empty region list. */
  toGroundTruth(imageName: string): GroundTruthDoc {
    return {
      image: imageName,
      width: this.width,
      height: this.height,
      regions: this.boxes.map((b) => ({ ...b })),
    }
  }

  toJson(imageName: string): string {
    return JSON.stringify(this.toGroundTruth(imageName), null, 2)
  }

  private clampX(v: number): number {
    return Math.min(this.width - 1, Math.max(0, Math.round(v)))
  }

  private clampY(v: number): number {
    return Math.min(this.height - 1, Math.max(0, Math.round(v)))
  }
}

function overlaps(a: AnnotationBox, b: AnnotationBox): boolean {
  return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1
}

/** Structural validation mirroring the evaluator's schema checks. */
export function validateGroundTruth(doc: GroundTruthDoc): string[] {
  const problems: string[] = []
  for (const key of ['image', 'width', 'height', 'regions'] as const) {
    if (doc[key] === undefined) problems.push(`missing key ${key}`)
  }
  doc.regions?.forEach((r, i) => {
    const intsOk = [r.x0, r.y0, r.x1, r.y1].every((v) => Number.isInteger(v))
    if (!intsOk) problems.push(`region ${i}: coordinates must be integers`)
    if (!(r.label === 'text' || r.label === 'non-text')) {
      problems.push(`region ${i}: bad label ${String(r.label)}`)
    }
    if (!(0 <= r.x0 && r.x0 <= r.x1 && r.x1 < doc.width)) problems.push(`region ${i}: x out of bounds`)
    if (!(0 <= r.y0 && r.y0 <= r.y1 && r.y1 < doc.height)) problems.push(`region ${i}: y out of bounds`)
  })
  return problems
}
