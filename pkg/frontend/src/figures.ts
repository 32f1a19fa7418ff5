/**
 * Figure renderers for the solver's output artifacts.
 *
 * Five kinds: contraction trace (increment vs iteration, log scale),
 * shooting profiles psi(rho) across alpha, energy-decay log-log fit with
 * the fitted and reference slopes overlaid, similarity-defect bars, and
 * the semigroup-constants table. Figures only read artifact files; any
 * number displayed is a CSV/JSON cell.
 */
import { writeFileSync } from "fs";
import { basename } from "path";

import {
  SchemaMismatch,
  numeric,
  profileHeaderSchema,
  readCsv,
  readJsonArtifact,
  verificationSchema,
} from "./schemas.js";
import { Svg, fmt, linearScale, logScale, plotArea } from "./svg.js";

export type FigureKind = "trace" | "profile" | "decay" | "defect" | "constants";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let p = Math.ceil(Math.log10(lo)); p <= Math.floor(Math.log10(hi)); p += 1) {
    ticks.push(10 ** p);
  }
  return ticks.length > 0 ? ticks : [lo, hi];
}

export function renderTrace(inputs: string[]): string {
  const rows = readCsv(inputs[0]);
  const ks = rows.map((r) => numeric(r, "k"));
  const incs = rows.map((r) => numeric(r, "increment"));
  const svg = new Svg("Fixed-point iteration: X-norm increment per step");
  svg.axes("iteration k", "increment (log scale)");
  const area = plotArea();
  const positive = incs.filter((v) => v > 0);
  const lo = positive.length > 0 ? Math.min(...positive) : 1e-16;
  const hi = positive.length > 0 ? Math.max(...positive) : 1;
  const sx = linearScale([Math.min(...ks), Math.max(Math.max(...ks), Math.min(...ks) + 1)], [area.x0 + 20, area.x1 - 20]);
  const sy = logScale([lo / 2, hi * 2], [area.y0, area.y1]);
  for (const t of logTicks(lo / 2, hi * 2)) {
    svg.yTick(sy(t), fmt(t, 2));
  }
  ks.forEach((k) => svg.xTick(sx(k), String(k)));
  const pts: Array<[number, number]> = [];
  rows.forEach((_, i) => {
    if (incs[i] > 0) {
      pts.push([sx(ks[i]), sy(incs[i])]);
    }
  });
  if (pts.length > 1) {
    svg.polyline(pts);
  }
  pts.forEach(([x, y]) => svg.circle(x, y, 3.5));
  if (pts.length === 0) {
    svg.text((area.x0 + area.x1) / 2, (area.y0 + area.y1) / 2, "all increments zero", {
      anchor: "middle",
    });
  }
  return svg.render();
}

export function renderProfile(inputs: string[]): string {
  const svg = new Svg("Corotational shooting profiles psi(rho)");
  svg.axes("rho", "psi");
  const area = plotArea();
  const curves = inputs.map((csvPath) => {
    const headerPath = csvPath.replace(/\.csv$/, ".json");
    const header = readJsonArtifact(headerPath, profileHeaderSchema);
    const rows = readCsv(csvPath);
    return {
      alpha: header.alpha,
      rho: rows.map((r) => numeric(r, "rho")),
      psi: rows.map((r) => numeric(r, "psi")),
    };
  });
  curves.sort((a, b) => a.alpha - b.alpha);
  const rhoMax = Math.max(...curves.map((c) => Math.max(...c.rho)));
  const psiMax = Math.max(1e-12, ...curves.map((c) => Math.max(...c.psi)));
  const sx = linearScale([0, rhoMax], [area.x0, area.x1]);
  const sy = linearScale([0, psiMax * 1.05], [area.y0, area.y1]);
  [0, rhoMax / 2, rhoMax].forEach((t) => svg.xTick(sx(t), fmt(t, 3)));
  [0, psiMax / 2, psiMax].forEach((t) => svg.yTick(sy(t), fmt(t, 3)));
  curves.forEach((curve, i) => {
    const color = COLORS[i % COLORS.length];
    const pts: Array<[number, number]> = curve.rho.map((r, j) => [sx(r), sy(curve.psi[j])]);
    svg.polyline(pts, color);
    svg.text(area.x1 - 8, area.y1 + 16 + 14 * i, `alpha = ${fmt(curve.alpha, 3)}`, {
      anchor: "end",
      fill: color,
    });
  });
  return svg.render();
}

export function renderDecay(inputs: string[]): string {
  const rows = readCsv(inputs[0]);
  if (rows.length === 0) {
    throw new SchemaMismatch("decay table is empty");
  }
  const radii = rows.map((r) => numeric(r, "radius"));
  const energies = rows.map((r) => numeric(r, "energy"));
  const exponent = numeric(rows[0], "exponent");
  const dim = rows[0]["x0"].split(";").length;
  const reference = 2.0 / dim;
  const svg = new Svg("Renormalized energy decay at the initial time");
  svg.axes("radius r (log scale)", "renormalized energy (log scale)");
  const area = plotArea();
  const usable = energies.map((e, i) => [radii[i], Math.max(e, 1e-300)] as [number, number]);
  const eLo = Math.min(...usable.map(([, e]) => e));
  const eHi = Math.max(...usable.map(([, e]) => e));
  const sx = logScale([Math.min(...radii) / 1.2, Math.max(...radii) * 1.2], [area.x0, area.x1]);
  const sy = logScale([eLo / 3, eHi * 3], [area.y0, area.y1]);
  radii.forEach((r) => svg.xTick(sx(r), fmt(r, 3)));
  logTicks(eLo / 3, eHi * 3).forEach((t) => svg.yTick(sy(t), fmt(t, 2)));
  usable.forEach(([r, e]) => svg.circle(sx(r), sy(e), 4, "#1f77b4"));
  // fitted line through the last point with the fitted slope from the table
  const [rAnchor, eAnchor] = usable[usable.length - 1];
  const line: Array<[number, number]> = [
    [sx(usable[0][0]), sy(eAnchor * (usable[0][0] / rAnchor) ** exponent)],
    [sx(rAnchor), sy(eAnchor)],
  ];
  svg.polyline(line, "#d62728", 2);
  const ref: Array<[number, number]> = [
    [sx(usable[0][0]), sy(eAnchor * (usable[0][0] / rAnchor) ** reference)],
    [sx(rAnchor), sy(eAnchor)],
  ];
  svg.polyline(ref, "#2ca02c", 1.5);
  svg.text(area.x0 + 12, area.y1 + 18, `fitted slope 2*alpha = ${exponent.toFixed(3)}`, {
    fill: "#d62728",
  });
  svg.text(area.x0 + 12, area.y1 + 34, `reference slope 2/n = ${reference.toFixed(3)}`, {
    fill: "#2ca02c",
  });
  return svg.render();
}

export function renderDefect(inputs: string[]): string {
  const doc = readJsonArtifact(inputs[0], verificationSchema);
  const entries = Object.entries(doc.similarity_defect).sort(
    (a, b) => Number(a[0]) - Number(b[0])
  );
  const svg = new Svg("Self-similarity defect sup |u(kx, k^2 t) - u(x, t)|");
  svg.axes("scaling factor", "defect (log scale)");
  const area = plotArea();
  const values = entries.map(([, v]) => Math.max(v, 1e-18));
  const hi = Math.max(...values, 2e-3) * 3;
  const lo = Math.min(...values, 1e-6) / 3;
  const sy = logScale([lo, hi], [area.y0, area.y1]);
  logTicks(lo, hi).forEach((t) => svg.yTick(sy(t), fmt(t, 2)));
  const slot = (area.x1 - area.x0) / Math.max(entries.length, 1);
  entries.forEach(([lam, value], i) => {
    const x = area.x0 + slot * (i + 0.5);
    const y = sy(Math.max(value, 1e-18));
    svg.rect(x - slot * 0.18, y, slot * 0.36, area.y0 - y, COLORS[i % COLORS.length]);
    svg.xTick(x, `lambda = ${lam}`);
    svg.text(x, y - 6, fmt(value, 3), { anchor: "middle", size: 10 });
  });
  return svg.render();
}

export function renderConstants(inputs: string[]): string {
  const doc = readJsonArtifact(inputs[0], verificationSchema);
  const svg = new Svg("Measured caloric-extension constants");
  const area = plotArea();
  const headers = ["t", "weak-L^n ratio", "C (L^2n)", `C (L^p, p=${fmt(doc.semigroup[0]?.p ?? 0, 3)})`, "scaled"];
  const colw = (area.x1 - area.x0) / headers.length;
  headers.forEach((name, j) => {
    svg.text(area.x0 + colw * j + 6, area.y1 + 18, name, { size: 12 });
  });
  svg.line(area.x0, area.y1 + 26, area.x1, area.y1 + 26);
  doc.semigroup.forEach((row, i) => {
    const y = area.y1 + 46 + 20 * i;
    const cells = [
      fmt(row.t, 4),
      fmt(row.weak_ln_ratio, 4),
      fmt(row.const_2n, 4),
      fmt(row.const_p, 4),
      row.scaled ? "yes" : "no",
    ];
    cells.forEach((cell, j) => {
      svg.text(area.x0 + colw * j + 6, y, cell, { size: 11 });
    });
  });
  return svg.render();
}

export function render(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new SchemaMismatch("figure needs at least one input artifact");
  }
  const body = {
    trace: renderTrace,
    profile: renderProfile,
    decay: renderDecay,
    defect: renderDefect,
    constants: renderConstants,
  }[spec.kind](spec.inputs);
  writeFileSync(spec.output, body);
  return body;
}

export function describe(spec: FigureSpec): string {
  return `${spec.kind} <- ${spec.inputs.map((p) => basename(p)).join(", ")} -> ${spec.output}`;
}
