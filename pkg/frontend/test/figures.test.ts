import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { render, renderDecay, renderTrace } from "../src/figures.js";
import { SchemaMismatch, readCsv, readJsonArtifact, sweepSchema, verificationSchema } from "../src/schemas.js";

const FIXTURES = join(__dirname, "fixtures");
const outDir = mkdtempSync(join(tmpdir(), "xf-figs-"));

function fixture(name: string): string {
  return join(FIXTURES, name);
}

describe("schema readers", () => {
  it("accepts the committed verification artifact", () => {
    const doc = readJsonArtifact(fixture("verification.json"), verificationSchema);
    expect(doc.semigroup.length).toBeGreaterThan(0);
    expect(Object.keys(doc.similarity_defect)).toContain("2.0");
  });

  it("accepts the sweep summary", () => {
    const doc = readJsonArtifact(fixture("sweep.json"), sweepSchema);
    expect(doc.rows.length).toBe(3);
    expect(doc.x_norm_slope).toBeGreaterThan(1.5);
  });

  it("rejects unknown schema versions", () => {
    const path = join(outDir, "bad.json");
    const doc = JSON.parse(readFileSync(fixture("verification.json"), "utf8"));
    doc.schema_version = 99;
    writeFileSync(path, JSON.stringify(doc));
    expect(() => readJsonArtifact(path, verificationSchema)).toThrow(SchemaMismatch);
  });
});

describe("figure rendering", () => {
  const kinds: Array<{ kind: "trace" | "profile" | "decay" | "defect" | "constants"; inputs: string[] }> = [
    { kind: "trace", inputs: [fixture("trace.csv")] },
    {
      kind: "profile",
      inputs: [fixture("profile_002.csv"), fixture("profile_005.csv"), fixture("profile_008.csv")],
    },
    { kind: "decay", inputs: [fixture("decay.csv")] },
    { kind: "defect", inputs: [fixture("verification.json")] },
    { kind: "constants", inputs: [fixture("verification.json")] },
  ];

  for (const { kind, inputs } of kinds) {
    it(`renders the ${kind} figure from real artifacts`, () => {
      const output = join(outDir, `${kind}.svg`);
      const body = render({ kind, inputs, output });
      expect(body.startsWith("<svg")).toBe(true);
      expect(readFileSync(output, "utf8")).toBe(body);
    });
  }

  it("is deterministic", () => {
    const a = renderTrace([fixture("trace.csv")]);
    const b = renderTrace([fixture("trace.csv")]);
    expect(a).toBe(b);
  });

  it("renders a single-iteration trace without crashing", () => {
    const path = join(outDir, "trace1.csv");
    const rows = readFileSync(fixture("trace.csv"), "utf8").split(/\r\n/);
    writeFileSync(path, rows.slice(0, 2).join("\r\n") + "\r\n");
    const body = renderTrace([path]);
    expect(body).toContain("<svg");
  });

  it("decay figure displays the fitted slope from the CSV to 3 decimals", () => {
    const rows = readCsv(fixture("decay.csv"));
    const expected = Number(rows[0]["exponent"]).toFixed(3);
    const body = renderDecay([fixture("decay.csv")]);
    expect(body).toContain(`fitted slope 2*alpha = ${expected}`);
  });

  it("decay figure overlays the dimension reference slope", () => {
    const rows = readCsv(fixture("decay.csv"));
    const dim = rows[0]["x0"].split(";").length;
    const body = renderDecay([fixture("decay.csv")]);
    expect(body).toContain(`reference slope 2/n = ${(2 / dim).toFixed(3)}`);
  });
});
