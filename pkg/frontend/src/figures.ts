/**
 * Figure specifications: which columns of the solver CSVs are plotted
 * against which, per figure analog.  No model quantity is recomputed
 * here; everything is a straight visualization of CSV columns.
 */

import { readFileSync, writeFileSync } from 'node:fs'
import { Table, distinct, filterRows, numericColumn, parseCsv, requireColumns, textColumn } from './csv.js'
import { Panel, Series } from './plot.js'
import { renderPlot } from './plot.js'

export type FigureId = 1 | 2 | 3 | 4 | 5 | 6

export type FigureSpec = {
  figure: FigureId
  inputCsv: string
  outputPath: string
}

function pairSeries(table: Table, xCol: string, yCol: string, label: string, dash?: string): Series {
  return { label, x: numericColumn(table, xCol), y: numericColumn(table, yCol), dash }
}

/** One series per distinct value of `byCol`, restricted to feasible rows. */
function groupedSeries(
  table: Table,
  byCol: string,
  xCol: string,
  yCol: string,
  labelPrefix: string,
  dash?: string,
): Series[] {
  return distinct(table, byCol).map((v) => {
    let sub = filterRows(table, (r) => r[byCol] === v)
    if (table.columns.includes('feasible')) {
      sub = filterRows(sub, (r) => r.feasible !== 'false')
    }
    return { ...pairSeries(sub, xCol, yCol, `${labelPrefix}=${v}`), dash }
  })
}

function figure1(table: Table): Panel[] {
  requireColumns(table, ['p', 'q_star', 'throughput', 'loss_prob', 'delay'])
  const p = numericColumn(table, 'p')
  return [
    {
      title: 'Busy probability, throughput, loss and latency vs data rate (K=1)',
      xLabel: 'data rate p',
      yLabel: 'value',
      series: [
        { label: 'p', x: p, y: p, dash: '4 3' },
        pairSeries(table, 'p', 'q_star', 'q*'),
        pairSeries(table, 'p', 'throughput', 'throughput'),
        pairSeries(table, 'p', 'loss_prob', 'loss'),
        pairSeries(table, 'p', 'delay', 'delay D(p)'),
      ],
    },
  ]
}

function figure2(table: Table): Panel[] {
  requireColumns(table, ['k_label', 'p', 'q_star', 'coverage', 'feasible'])
  return [
    {
      title: 'Busy link probability q* vs data rate',
      xLabel: 'data rate p',
      yLabel: 'q*',
      series: groupedSeries(table, 'k_label', 'p', 'q_star', 'K'),
    },
    {
      title: 'Coverage V(q*) vs data rate',
      xLabel: 'data rate p',
      yLabel: 'coverage',
      series: groupedSeries(table, 'k_label', 'p', 'coverage', 'K'),
    },
  ]
}

function figure3(table: Table): Panel[] {
  requireColumns(table, ['k_label', 'p', 'loss_prob', 'delay', 'feasible'])
  return [
    {
      title: 'Loss probability (log scale)',
      xLabel: 'data rate p',
      yLabel: 'loss probability',
      yScale: 'log',
      series: groupedSeries(table, 'k_label', 'p', 'loss_prob', 'K'),
    },
    {
      title: 'Latency (log scale)',
      xLabel: 'data rate p',
      yLabel: 'delay',
      yScale: 'log',
      series: groupedSeries(table, 'k_label', 'p', 'delay', 'K', '4 3'),
    },
  ]
}

function figure4(table: Table): Panel[] {
  requireColumns(table, ['p', 'K', 'loss_prob', 'delay'])
  return [
    {
      title: 'Loss probability vs buffer size',
      xLabel: 'buffer size K',
      yLabel: 'loss probability',
      yScale: 'log',
      series: groupedSeries(table, 'p', 'K', 'loss_prob', 'p'),
    },
    {
      title: 'Latency vs buffer size',
      xLabel: 'buffer size K',
      yLabel: 'delay',
      series: groupedSeries(table, 'p', 'K', 'delay', 'p'),
    },
  ]
}

function figure5(table: Table): Panel[] {
  requireColumns(table, ['kappa', 'sigma2', 'q', 'coverage'])
  const kappa = textColumn(table, 'kappa')
  const sigma2 = textColumn(table, 'sigma2')
  const keys: string[] = []
  const seen = new Set<string>()
  kappa.forEach((k, i) => {
    const key = `${k}|${sigma2[i]}`
    if (!seen.has(key)) {
      seen.add(key)
      keys.push(key)
    }
  })
  const series = keys.map((key) => {
    const [k, s] = key.split('|')
    const sub = filterRows(table, (r) => r.kappa === k && r.sigma2 === s)
    return pairSeries(sub, 'q', 'coverage', `κ=${Number(k)}, σ²=${Number(s)}`)
  })
  return [
    {
      title: 'Coverage vs busy probability for bounded attenuation and noise',
      xLabel: 'busy probability q',
      yLabel: 'coverage V(q)',
      series,
    },
  ]
}

function figure6(table: Table): Panel[] {
  requireColumns(table, ['kappa', 'p', 'throughput'])
  return [
    {
      title: 'Throughput vs data rate (K=1)',
      xLabel: 'data rate p',
      yLabel: 'throughput',
      series: groupedSeries(table, 'kappa', 'p', 'throughput', 'κ'),
    },
  ]
}

const BUILDERS: Record<FigureId, (t: Table) => Panel[]> = {
  1: figure1,
  2: figure2,
  3: figure3,
  4: figure4,
  5: figure5,
  6: figure6,
}

/** Builds the panels for a parsed figure CSV (exposed for tests). */
export function buildPanels(figure: FigureId, table: Table): Panel[] {
  const builder = BUILDERS[figure]
  if (!builder) throw new Error(`unknown figure id ${figure}`)
  return builder(table)
}

/** Reads the CSV, renders the figure analog and writes the SVG. */
export function render(spec: FigureSpec): string {
  const table = parseCsv(readFileSync(spec.inputCsv, 'utf8'))
  const svg = renderPlot(buildPanels(spec.figure, table))
  writeFileSync(spec.outputPath, svg)
  return svg
}

/** Entry point shared by the per-figure scripts. */
export function runScript(figure: FigureId, argv: string[]): number {
  const [input, output] = argv
  if (!input || !output) {
    console.error(`usage: fig${figure} <input.csv> <output.svg>`)
    return 2
  }
  try {
    render({ figure, inputCsv: input, outputPath: output })
    return 0
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err))
    return 1
  }
}
