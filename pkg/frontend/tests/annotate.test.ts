import { describe, expect, it } from 'vitest'

import { AnnotationSet, validateGroundTruth } from '../src/annotate.js'

describe('AnnotationSet', () => {
  it('exports two labeled boxes in the evaluator schema', () => {
    const set = new AnnotationSet(600, 400)
    expect(set.add(10, 20, 80, 40, 'text')).toBeNull()
    expect(set.add(0, 99, 599, 99, 'non-text')).toBeNull()
    const doc = set.toGroundTruth('sample')
    expect(doc).toEqual({
      image: 'sample',
      width: 600,
      height: 400,
      regions: [
        { x0: 10, y0: 20, x1: 80, y1: 40, label: 'text' },
        { x0: 0, y0: 99, x1: 599, y1: 99, label: 'non-text' },
      ],
    })
    expect(validateGroundTruth(doc)).toEqual([])
  })

  it('empty annotation set is schema-valid', () => {
    const doc = new AnnotationSet(100, 50).toGroundTruth('empty')
    expect(doc.regions).toEqual([])
    expect(validateGroundTruth(doc)).toEqual([])
  })

  it('normalizes dragged corners and clamps to bounds', () => {
    const set = new AnnotationSet(100, 50)
    set.add(90.7, 48.2, -5, -3, 'text') // dragged up-left, partly outside
    expect(set.list()[0]).toEqual({ x0: 0, y0: 0, x1: 91, y1: 48, label: 'text' })
    expect(validateGroundTruth(set.toGroundTruth('x'))).toEqual([])
  })

  it('warns on overlapping duplicates without blocking them', () => {
    const set = new AnnotationSet(100, 100)
    expect(set.add(10, 10, 30, 30, 'text')).toBeNull()
    const warning = set.add(15, 15, 35, 35, 'text')
    expect(warning).toMatch(/overlaps/)
    expect(set.count).toBe(2) // still added
  })

  it('no warning for overlap across different labels', () => {
    const set = new AnnotationSet(100, 100)
    set.add(10, 10, 30, 30, 'text')
    expect(set.add(15, 15, 35, 35, 'non-text')).toBeNull()
  })

  it('remove and clear', () => {
    const set = new AnnotationSet(100, 100)
    set.add(1, 1, 2, 2, 'text')
    set.add(5, 5, 6, 6, 'text')
    set.removeAt(0)
    expect(set.count).toBe(1)
    set.clear()
    expect(set.count).toBe(0)
  })

  it('validator catches bad documents', () => {
    const bad = {
      image: 'x',
      width: 10,
      height: 10,
      regions: [{ x0: 5, y0: 0, x1: 50, y1: 3, label: 'banana' as never }],
    }
    const problems = validateGroundTruth(bad)
    expect(problems.some((p) => p.includes('bad label'))).toBe(true)
    expect(problems.some((p) => p.includes('x out of bounds'))).toBe(true)
  })
})
