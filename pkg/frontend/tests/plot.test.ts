import { describe, expect, it } from 'vitest'
import { renderPlot } from '../src/plot.js'

describe('renderPlot', () => {
  it('is deterministic for identical input', () => {
    const panels = [{
      xLabel: 'x', yLabel: 'y',
      series: [{ label: 'a', x: [0, 1, 2], y: [0, 1, 4] }],
    }]
    expect(renderPlot(panels)).toBe(renderPlot(panels))
  })

  it('renders empty axes for an empty series', () => {
    const svg = renderPlot([{ xLabel: 'x', yLabel: 'y', series: [{ label: 'a', x: [], y: [] }] }])
    expect(svg).toContain('<svg')
    expect(svg).toContain('<rect')          // plot frame still drawn
    expect(svg).not.toContain('<polyline')  // but no data path
  })

  it('drops nonpositive points under a log axis', () => {
    const svg = renderPlot([{
      xLabel: 'x', yLabel: 'y', yScale: 'log',
      series: [{ label: 'a', x: [1, 2, 3], y: [0, 0.1, 1] }],
    }])
    const path = svg.match(/<polyline points="([^"]*)"/)![1]
    expect(path.split(' ')).toHaveLength(2)
  })

  it('stacks panels vertically', () => {
    const panel = { xLabel: 'x', yLabel: 'y', series: [{ label: 'a', x: [0, 1], y: [0, 1] }] }
    const svg = renderPlot([panel, panel])
    expect(svg).toContain('height="640"')
  })

  it('escapes markup in labels', () => {
    const svg = renderPlot([{
      xLabel: 'a < b', yLabel: 'y',
      series: [{ label: 'x & y', x: [0, 1], y: [0, 1] }],
    }])
    expect(svg).toContain('a &lt; b')
    expect(svg).toContain('x &amp; y')
  })
})
