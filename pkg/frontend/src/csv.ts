/**
 * Reader for the solver CLI's CSV output: leading `# key=value` comment
 * lines carry run metadata, the first plain line is the header, and all
 * data cells are either numbers or short labels (e.g. k_label = "inf").
 */

export type Table = {
  meta: Record<string, string>
  columns: string[]
  rows: string[][]
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const meta: Record<string, string> = {}
  let columns: string[] | null = null
  const rows: string[][] = []
  for (const raw of text.split('\n')) {
    const line = raw.trimEnd()
    if (line === '') continue
    if (line.startsWith('#')) {
      const body = line.slice(1).trim()
      const eq = body.indexOf('=')
      if (eq > 0) meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim()
      continue
    }
    if (columns === null) {
      columns = line.split(',').map((c) => c.trim())
    } else {
      rows.push(line.split(','))
    }
  }
  if (columns === null) throw new SchemaError('no header line found')
  return { meta, columns, rows }
}

/** Asserts the named columns exist, naming the first missing one. */
export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new SchemaError(`missing column: ${name}`)
    }
  }
}

/** Numeric values of one column; NaN cells are kept (callers filter). */
export function numericColumn(table: Table, name: string): number[] {
  const i = table.columns.indexOf(name)
  if (i < 0) throw new SchemaError(`missing column: ${name}`)
  return table.rows.map((r) => Number(r[i]))
}

export function textColumn(table: Table, name: string): string[] {
  const i = table.columns.indexOf(name)
  if (i < 0) throw new SchemaError(`missing column: ${name}`)
  return table.rows.map((r) => r[i])
}

/** Rows for which `predicate` holds, as a new table sharing the header. */
export function filterRows(table: Table, predicate: (row: Record<string, string>) => boolean): Table {
  const rows = table.rows.filter((r) => {
    const rec: Record<string, string> = {}
    table.columns.forEach((c, i) => (rec[c] = r[i]))
    return predicate(rec)
  })
  return { meta: table.meta, columns: table.columns, rows }
}

/** Distinct values of a column, in first-appearance order. */
export function distinct(table: Table, name: string): string[] {
  const seen = new Set<string>()
  const out: string[] = []
  for (const v of textColumn(table, name)) {
    if (!seen.has(v)) {
      seen.add(v)
      out.push(v)
    }
  }
  return out
}
