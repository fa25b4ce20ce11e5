/** Linear and logarithmic axis scales with simple "nice" tick generation. */

export type ScaleKind = 'linear' | 'log'

export type Scale = {
  kind: ScaleKind
  domain: [number, number]
  range: [number, number]
  map: (x: number) => number
  ticks: number[]
}

function niceStep(span: number): number {
  const raw = span / 5
  const mag = 10 ** Math.floor(Math.log10(raw))
  const norm = raw / mag
  const step = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10
  return step * mag
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [lo, hi] = domain
  if (lo === hi) {
    lo -= 0.5
    hi += 0.5
  }
  const k = (range[1] - range[0]) / (hi - lo)
  const step = niceStep(hi - lo)
  const ticks: number[] = []
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t)
  }
  return {
    kind: 'linear',
    domain: [lo, hi],
    range,
    map: (x) => range[0] + (x - lo) * k,
    ticks,
  }
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  let [lo, hi] = domain
  if (!(lo > 0) || !(hi > 0)) throw new Error('log scale needs a positive domain')
  if (lo === hi) {
    lo /= 10
    hi *= 10
  }
  const llo = Math.log10(lo)
  const lhi = Math.log10(hi)
  const k = (range[1] - range[0]) / (lhi - llo)
  const ticks: number[] = []
  for (let e = Math.ceil(llo); e <= Math.floor(lhi) + 1e-9; e += 1) {
    ticks.push(10 ** e)
  }
  if (ticks.length === 0) ticks.push(lo, hi)
  return {
    kind: 'log',
    domain: [lo, hi],
    range,
    map: (x) => range[0] + (Math.log10(x) - llo) * k,
    ticks,
  }
}

export function makeScale(kind: ScaleKind, domain: [number, number], range: [number, number]): Scale {
  return kind === 'log' ? logScale(domain, range) : linearScale(domain, range)
}

/** Domain of the finite values across several series ([0, 1] fallback). */
export function dataDomain(series: number[][], positiveOnly = false): [number, number] {
  let lo = Infinity
  let hi = -Infinity
  for (const ys of series) {
    for (const y of ys) {
      if (!Number.isFinite(y)) continue
      if (positiveOnly && y <= 0) continue
      if (y < lo) lo = y
      if (y > hi) hi = y
    }
  }
  if (lo > hi) return positiveOnly ? [0.1, 1] : [0, 1]
  return [lo, hi]
}

export function formatTick(x: number): string {
  if (x === 0) return '0'
  const a = Math.abs(x)
  if (a >= 0.01 && a < 10000) {
    return Number(x.toPrecision(4)).toString()
  }
  return x.toExponential(0).replace('e+', 'e').replace('e-', 'e-')
}
