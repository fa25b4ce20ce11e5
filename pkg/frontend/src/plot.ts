/**
 * Minimal SVG line plotting: one or more stacked panels, each with axes,
 * ticks, gridlines, polyline series and a legend.  Output is a pure
 * function of the input, so identical data gives identical files.
 */

import { Scale, ScaleKind, dataDomain, formatTick, makeScale } from './scale.js'

export type Series = {
  label: string
  x: number[]
  y: number[]
  color?: string
  dash?: string
}

export type Panel = {
  title?: string
  xLabel: string
  yLabel: string
  xScale?: ScaleKind
  yScale?: ScaleKind
  series: Series[]
}

export type PlotOptions = {
  width?: number
  panelHeight?: number
}

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf', '#7f7f7f']
const MARGIN = { top: 34, right: 130, bottom: 44, left: 64 }

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

function fmtCoord(v: number): string {
  return v.toFixed(2)
}

/** Points usable under the panel scales (finite, positive where log). */
function usable(s: Series, xLog: boolean, yLog: boolean): Array<[number, number]> {
  const pts: Array<[number, number]> = []
  for (let i = 0; i < s.x.length; i++) {
    const x = s.x[i]
    const y = s.y[i]
    if (!Number.isFinite(x) || !Number.isFinite(y)) continue
    if (xLog && x <= 0) continue
    if (yLog && y <= 0) continue
    pts.push([x, y])
  }
  return pts
}

function renderPanel(panel: Panel, width: number, height: number, yOffset: number): string {
  const xLog = panel.xScale === 'log'
  const yLog = panel.yScale === 'log'
  const pts = panel.series.map((s) => usable(s, xLog, yLog))
  const xDomain = dataDomain(pts.map((p) => p.map(([x]) => x)), xLog)
  const yDomain = dataDomain(pts.map((p) => p.map(([, y]) => y)), yLog)
  const x0 = MARGIN.left
  const x1 = width - MARGIN.right
  const yTop = yOffset + MARGIN.top
  const yBot = yOffset + height - MARGIN.bottom
  const sx: Scale = makeScale(panel.xScale ?? 'linear', xDomain, [x0, x1])
  const sy: Scale = makeScale(panel.yScale ?? 'linear', yDomain, [yBot, yTop])

  const parts: string[] = []
  if (panel.title) {
    parts.push(`<text x="${fmtCoord((x0 + x1) / 2)}" y="${fmtCoord(yTop - 14)}" text-anchor="middle" font-size="14" font-weight="bold">${esc(panel.title)}</text>`)
  }
  // frame
  parts.push(`<rect x="${fmtCoord(x0)}" y="${fmtCoord(yTop)}" width="${fmtCoord(x1 - x0)}" height="${fmtCoord(yBot - yTop)}" fill="none" stroke="#333" stroke-width="1"/>`)
  // ticks and gridlines
  for (const t of sx.ticks) {
    const px = sx.map(t)
    parts.push(`<line x1="${fmtCoord(px)}" y1="${fmtCoord(yTop)}" x2="${fmtCoord(px)}" y2="${fmtCoord(yBot)}" stroke="#ddd" stroke-width="0.5"/>`)
    parts.push(`<line x1="${fmtCoord(px)}" y1="${fmtCoord(yBot)}" x2="${fmtCoord(px)}" y2="${fmtCoord(yBot + 4)}" stroke="#333" stroke-width="1"/>`)
    parts.push(`<text x="${fmtCoord(px)}" y="${fmtCoord(yBot + 17)}" text-anchor="middle" font-size="11">${esc(formatTick(t))}</text>`)
  }
  for (const t of sy.ticks) {
    const py = sy.map(t)
    parts.push(`<line x1="${fmtCoord(x0)}" y1="${fmtCoord(py)}" x2="${fmtCoord(x1)}" y2="${fmtCoord(py)}" stroke="#ddd" stroke-width="0.5"/>`)
    parts.push(`<line x1="${fmtCoord(x0 - 4)}" y1="${fmtCoord(py)}" x2="${fmtCoord(x0)}" y2="${fmtCoord(py)}" stroke="#333" stroke-width="1"/>`)
    parts.push(`<text x="${fmtCoord(x0 - 7)}" y="${fmtCoord(py + 4)}" text-anchor="end" font-size="11">${esc(formatTick(t))}</text>`)
  }
  // axis labels
  parts.push(`<text x="${fmtCoord((x0 + x1) / 2)}" y="${fmtCoord(yBot + 34)}" text-anchor="middle" font-size="12">${esc(panel.xLabel)}</text>`)
  parts.push(`<text x="${fmtCoord(x0 - 48)}" y="${fmtCoord((yTop + yBot) / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 ${fmtCoord(x0 - 48)} ${fmtCoord((yTop + yBot) / 2)})">${esc(panel.yLabel)}</text>`)
  // series
  panel.series.forEach((s, i) => {
    const color = s.color ?? PALETTE[i % PALETTE.length]
    const path = pts[i].map(([x, y]) => `${fmtCoord(sx.map(x))},${fmtCoord(sy.map(y))}`).join(' ')
    if (path !== '') {
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : ''
      parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`)
    }
    // legend entry
    const ly = yTop + 8 + i * 16
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : ''
    parts.push(`<line x1="${fmtCoord(x1 + 10)}" y1="${fmtCoord(ly)}" x2="${fmtCoord(x1 + 34)}" y2="${fmtCoord(ly)}" stroke="${color}" stroke-width="1.6"${dash}/>`)
    parts.push(`<text x="${fmtCoord(x1 + 38)}" y="${fmtCoord(ly + 4)}" font-size="11">${esc(s.label)}</text>`)
  })
  return parts.join('\n')
}

/** Renders stacked panels into a standalone SVG document. */
export function renderPlot(panels: Panel[], options: PlotOptions = {}): string {
  const width = options.width ?? 640
  const panelHeight = options.panelHeight ?? 320
  const height = panels.length * panelHeight
  const body = panels.map((p, i) => renderPanel(p, width, panelHeight, i * panelHeight)).join('\n')
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    body,
    `</svg>`,
    '',
  ].join('\n')
}
