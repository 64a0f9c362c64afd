/**
 * Acceptance criterion 10: dragging the area threshold from 400 to 410
 * coalesces into exactly one PATCH, refreshes exactly the {i_mcc, i_o, i_f}
 * panes, and the config the user exports is the one the service computed
 * the displayed i_f from.
 *
 * The CLI leg of the export check (archive config -> `maptext extract`
 * reproduces i_f byte-exactly) cannot invoke the CLI from a browser test;
 * it is covered by the Python suite's service/CLI cross-surface tests
 * (tests/test_service.py::TestExport and acceptance criterion 9).
 */

import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest'

import { StageName, ServiceClient, STAGES } from '../src/api.js'
import { Tuner } from '../src/state.js'
import { RefreshPlanner } from '../src/viewer.js'
import { MockService } from './mock_service.js'

describe('criterion 10: the interactive threshold loop', () => {
  beforeEach(() => vi.useFakeTimers())
  afterEach(() => vi.useRealTimers())

  async function fixtureSession(service: MockService) {
    const client = new ServiceClient('', service.fetch)
    const tuner = new Tuner(client)
    const planner = new RefreshPlanner()
    const refreshed: StageName[][] = []

    tuner.on('stagesChanged', (changed) => {
      const plan = planner.plan(changed)
      refreshed.push(plan)
      // fetch the planned panes like the viewer would
      for (const stage of plan) {
        void client.fetchStage('mock-session', stage, planner.etagOf(stage)).then((r) => {
          planner.noteEtag(stage, r.etag)
        })
      }
    })

    await tuner.upload(new Blob([new Uint8Array([137, 80, 78, 71])]))
    await tuner.run()
    // initial display: all panes fetched once
    for (const stage of STAGES) {
      const r = await client.fetchStage('mock-session', stage)
      planner.noteEtag(stage, r.etag)
    }
    refreshed.length = 0 // drop the warm-up run's full-stage event
    return { client, tuner, planner, refreshed }
  }

  it('drag 400 -> 410 sends one PATCH and refreshes exactly i_mcc, i_o, i_f', async () => {
    const service = new MockService()
    const { tuner, planner, refreshed } = await fixtureSession(service)
    expect(service.params.area_threshold).toBe(400)
    const patchesBefore = service.patchCount
    const stageFetchesBefore = service.log.filter((r) => r.path.includes('/stages/')).length

    // the slider fires a burst of intermediate values while dragging
    for (let t = 401; t <= 410; t++) {
      tuner.update({ area_threshold: t })
      await vi.advanceTimersByTimeAsync(40) // faster than the 250 ms debounce
    }
    await vi.advanceTimersByTimeAsync(300) // quiet period elapses
    await vi.advanceTimersByTimeAsync(0)

    // exactly one coalesced PATCH carrying the final value
    expect(service.patchCount - patchesBefore).toBe(1)
    const patch = service.log.filter((r) => r.method === 'PATCH').at(-1)
    expect(patch?.body).toEqual({ area_threshold: 410 })
    expect(service.params.area_threshold).toBe(410)

    // exactly the three threshold-dependent panes were refreshed
    expect(refreshed).toEqual([['i_mcc', 'i_o', 'i_f']])
    const refetchedNames = service.log
      .filter((r) => r.path.includes('/stages/'))
      .slice(stageFetchesBefore)
      .map((r) => r.path.match(/stages\/(\w+)\.png/)?.[1])
    expect(refetchedNames.sort()).toEqual(['i_f', 'i_mcc', 'i_o'])

    // unchanged panes would be served 304 if re-requested with their ETag
    const client = new ServiceClient('', service.fetch)
    const again = await client.fetchStage('mock-session', 'i_gray', planner.etagOf('i_gray'))
    expect(again.status).toBe(304)

    // the exported config (served verbatim by the service) is exactly the
    // params the displayed i_f was computed from
    expect(tuner.params).toEqual(service.params)
    expect(tuner.params?.area_threshold).toBe(410)
  })

  it('changed panes carry fresh ETags so their re-fetch returns 200', async () => {
    const service = new MockService()
    const { client, planner } = await (async () => {
      const client = new ServiceClient('', service.fetch)
      const planner = new RefreshPlanner()
      await client.createSession(new Blob([new Uint8Array([1])]))
      await client.run('mock-session')
      for (const stage of STAGES) {
        const r = await client.fetchStage('mock-session', stage)
        planner.noteEtag(stage, r.etag)
      }
      return { client, planner }
    })()
    await client.patchParams('mock-session', { area_threshold: 410 })
    const changed = await client.fetchStage('mock-session', 'i_f', planner.etagOf('i_f'))
    expect(changed.status).toBe(200)
    const unchanged = await client.fetchStage('mock-session', 'i_gray', planner.etagOf('i_gray'))
    expect(unchanged.status).toBe(304)
  })

  it('out-of-range threshold surfaces a field-level error and no pane refresh', async () => {
    const service = new MockService()
    const { tuner, refreshed } = await fixtureSession(service)
    const errors: [string, string][] = []
    tuner.on('fieldError', (field, message) => errors.push([field, message]))

    tuner.update({ area_threshold: 600 * 400 })
    await vi.advanceTimersByTimeAsync(300)

    expect(errors).toHaveLength(1)
    expect(errors[0][0]).toBe('area_threshold')
    expect(errors[0][1]).toContain('0 < T < 240000')
    expect(refreshed).toEqual([]) // nothing recomputed, nothing refreshed
  })
})
