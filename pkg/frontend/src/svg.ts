/**
 * Minimal deterministic SVG scene builder: fixed canvas, fixed fonts,
 * numeric formatting stable across runs. No DOM, no randomness.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 72, right: 24, top: 40, bottom: 56 };
const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

export interface Scale {
  (value: number): number;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  return (v: number) => inner(Math.log10(v));
}

export function fmt(value: number, digits = 4): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return value.toExponential(digits - 1);
  }
  return value.toPrecision(digits);
}

export class Svg {
  private parts: string[] = [];

  constructor(public title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`
    );
    this.parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
    this.text(WIDTH / 2, MARGIN.top / 2 + 6, title, { size: 16, anchor: "middle" });
  }

  text(
    x: number,
    y: number,
    content: string,
    opts: { size?: number; anchor?: string; fill?: string } = {}
  ): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#222";
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" ${FONT} font-size="${size}" ` +
        `text-anchor="${anchor}" fill="${fill}">${escapeXml(content)}</text>`
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#222", width = 1, dash = ""): void {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke = "#1f77b4", width = 1.5): void {
    const path = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  circle(x: number, y: number, r: number, fill = "#1f77b4"): void {
    this.parts.push(`<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill = "#1f77b4"): void {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}"/>`
    );
  }

  axes(xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.line(x0, y0, x1, y0);
    this.line(x0, y0, x0, y1);
    this.text((x0 + x1) / 2, HEIGHT - 16, xLabel, { anchor: "middle" });
    this.parts.push(
      `<text x="20" y="${(y0 + y1) / 2}" ${FONT} font-size="12" text-anchor="middle" ` +
        `transform="rotate(-90 20 ${(y0 + y1) / 2})" fill="#222">${escapeXml(yLabel)}</text>`
    );
  }

  xTick(px: number, label: string): void {
    const y0 = HEIGHT - MARGIN.bottom;
    this.line(px, y0, px, y0 + 5);
    this.text(px, y0 + 18, label, { anchor: "middle", size: 10 });
  }

  yTick(py: number, label: string): void {
    const x0 = MARGIN.left;
    this.line(x0 - 5, py, x0, py);
    this.text(x0 - 8, py + 3, label, { anchor: "end", size: 10 });
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function plotArea(): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}
