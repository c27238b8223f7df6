/**
 * Minimal deterministic SVG chart builder.
 *
 * Everything is emitted as plain SVG text with fixed-precision numbers,
 * so identical inputs give byte-identical files — the whole point for
 * regression-tested figures. No DOM, no renderer, no timestamps.
 */

export const STYLE = {
  width: 720,
  height: 420,
  margin: { top: 36, right: 20, bottom: 44, left: 56 },
  font: "12px sans-serif",
  titleFont: "15px sans-serif",
  palette: ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"],
  grid: "#dddddd",
  axis: "#333333",
  marker: "#999999",
} as const;

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

function fmt(x: number): string {
  // fixed precision keeps output byte-stable across platforms
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
  return Object.assign(f, { domain });
}

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) return [lo];
  const raw = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step / 1e6; v += step) {
    ticks.push(Math.abs(v) < step / 1e6 ? 0 : v);
  }
  return ticks;
}

function tickLabel(v: number): string {
  const s = v.toPrecision(6);
  return String(Number(s));
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class Chart {
  private parts: string[] = [];
  readonly x: Scale;
  readonly y: Scale;
  private legends: { label: string; color: string }[] = [];

  constructor(
    xDomain: [number, number],
    yDomain: [number, number],
    readonly title: string,
    readonly xLabel: string,
    readonly yLabel: string,
  ) {
    const m = STYLE.margin;
    this.x = linearScale(xDomain, [m.left, STYLE.width - m.right]);
    this.y = linearScale(yDomain, [STYLE.height - m.bottom, m.top]);
  }

  line(xs: number[], ys: number[], color: string, label?: string): void {
    const pts = xs
      .map((x, i) => `${fmt(this.x(x))},${fmt(this.y(ys[i]))}`)
      .join(" ");
    this.parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5" ` +
        `points="${pts}"/>`,
    );
    if (label !== undefined) this.legends.push({ label, color });
  }

  band(xs: number[], lo: number[], hi: number[], color: string): void {
    const fwd = xs.map((x, i) => `${fmt(this.x(x))},${fmt(this.y(hi[i]))}`);
    const back = xs
      .map((x, i) => `${fmt(this.x(x))},${fmt(this.y(lo[i]))}`)
      .reverse();
    this.parts.push(
      `<polygon fill="${color}" fill-opacity="0.15" stroke="none" ` +
        `points="${fwd.concat(back).join(" ")}"/>`,
    );
  }

  verticalMarker(xv: number, label: string): void {
    const m = STYLE.margin;
    const px = fmt(this.x(xv));
    this.parts.push(
      `<line x1="${px}" y1="${m.top}" x2="${px}" ` +
        `y2="${STYLE.height - m.bottom}" stroke="${STYLE.marker}" ` +
        `stroke-dasharray="3,3"/>`,
      `<text x="${px}" y="${m.top - 4}" text-anchor="middle" ` +
        `fill="${STYLE.marker}" font-size="9">${esc(label)}</text>`,
    );
  }

  errorBar(xv: number, yv: number, half: number, color: string): void {
    const px = fmt(this.x(xv));
    const y0 = fmt(this.y(yv - half));
    const y1 = fmt(this.y(yv + half));
    this.parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" ` +
        `stroke="${color}" stroke-width="1"/>`,
    );
  }

  point(xv: number, yv: number, color: string, r = 3.5): void {
    this.parts.push(
      `<circle cx="${fmt(this.x(xv))}" cy="${fmt(this.y(yv))}" r="${r}" ` +
        `fill="${color}"/>`,
    );
  }

  minimumMarker(xv: number, yv: number, label: string): void {
    const px = fmt(this.x(xv));
    const py = fmt(this.y(yv));
    this.parts.push(
      `<circle class="minimum" cx="${px}" cy="${py}" r="6" fill="none" ` +
        `stroke="#d62728" stroke-width="2"/>`,
      `<text x="${px}" y="${fmt(this.y(yv) - 10)}" text-anchor="middle" ` +
        `fill="#d62728" font-size="11">${esc(label)}</text>`,
    );
  }

  render(): string {
    const m = STYLE.margin;
    const w = STYLE.width;
    const h = STYLE.height;
    const axes: string[] = [];
    for (const tx of niceTicks(this.x.domain[0], this.x.domain[1])) {
      const px = fmt(this.x(tx));
      axes.push(
        `<line x1="${px}" y1="${m.top}" x2="${px}" y2="${h - m.bottom}" ` +
          `stroke="${STYLE.grid}"/>`,
        `<text x="${px}" y="${h - m.bottom + 16}" text-anchor="middle" ` +
          `fill="${STYLE.axis}" font-size="11">${tickLabel(tx)}</text>`,
      );
    }
    for (const ty of niceTicks(this.y.domain[0], this.y.domain[1])) {
      const py = fmt(this.y(ty));
      axes.push(
        `<line x1="${m.left}" y1="${py}" x2="${w - m.right}" y2="${py}" ` +
          `stroke="${STYLE.grid}"/>`,
        `<text x="${m.left - 6}" y="${py}" text-anchor="end" ` +
          `dominant-baseline="middle" fill="${STYLE.axis}" ` +
          `font-size="11">${tickLabel(ty)}</text>`,
      );
    }
    axes.push(
      `<rect x="${m.left}" y="${m.top}" width="${w - m.left - m.right}" ` +
        `height="${h - m.top - m.bottom}" fill="none" ` +
        `stroke="${STYLE.axis}"/>`,
      `<text x="${(m.left + w - m.right) / 2}" y="${h - 8}" ` +
        `text-anchor="middle" fill="${STYLE.axis}" ` +
        `font-size="12">${esc(this.xLabel)}</text>`,
      `<text x="14" y="${(m.top + h - m.bottom) / 2}" text-anchor="middle" ` +
        `fill="${STYLE.axis}" font-size="12" transform="rotate(-90 14 ` +
        `${(m.top + h - m.bottom) / 2})">${esc(this.yLabel)}</text>`,
      `<text x="${w / 2}" y="20" text-anchor="middle" fill="${STYLE.axis}" ` +
        `font-size="15">${esc(this.title)}</text>`,
    );
    const legend = this.legends.map(({ label, color }, i) => {
      const lx = w - m.right - 110;
      const ly = m.top + 14 + 16 * i;
      return (
        `<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="1.5"/>` +
        `<text x="${lx + 28}" y="${ly + 4}" fill="${STYLE.axis}" ` +
        `font-size="11">${esc(label)}</text>`
      );
    });
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" ` +
        `viewBox="0 0 ${w} ${h}" font-family="sans-serif">`,
      `<rect width="${w}" height="${h}" fill="#ffffff"/>`,
      ...axes,
      ...this.parts,
      ...legend,
      `</svg>`,
      ``,
    ].join("\n");
  }
}

export function extent(arrays: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const a of arrays) {
    for (const v of a) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo === Infinity) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}
