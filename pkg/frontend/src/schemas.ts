/**
 * Artifact readers: CSV tables and schema-validated JSON documents.
 *
 * Readers reject documents whose schema_version they do not understand;
 * figures never recompute physics, so every number they show comes from a
 * cell parsed here.
 */
import { readFileSync } from "fs";
import { z } from "zod";

export const SCHEMA_VERSION = 1;

export class SchemaMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaMismatch";
  }
}

/** Parse a simple RFC-4180-style CSV (no quoted fields in our artifacts). */
export function readCsv(path: string): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r\n|\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatch(`empty CSV: ${path}`);
  }
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    header.forEach((name, i) => {
      row[name] = cells[i] ?? "";
    });
    return row;
  });
}

export function numeric(row: Record<string, string>, key: string): number {
  const value = Number(row[key]);
  if (!Number.isFinite(value)) {
    throw new SchemaMismatch(`non-numeric cell ${key}=${row[key]}`);
  }
  return value;
}

function versioned<T extends z.ZodRawShape>(shape: T) {
  return z.object({ schema_version: z.number(), ...shape });
}

export const traceSummarySchema = versioned({
  status: z.string(),
  iterations: z.number(),
  final_x_norm: z.number(),
  final_increment: z.number(),
  projection_defect: z.number().nullable(),
});

export const profileHeaderSchema = versioned({
  n: z.number().int(),
  alpha: z.number(),
  slope: z.number(),
  psi_inf: z.number(),
  converged: z.boolean(),
  tail_fit: z.number(),
});

export const verificationSchema = versioned({
  similarity_defect: z.record(z.string(), z.number()),
  decay_fits: z.array(
    z.object({
      x0: z.array(z.number()),
      exponent: z.number(),
      radii: z.array(z.number()),
      energies: z.array(z.number()),
    })
  ),
  semigroup: z.array(
    z.object({
      t: z.number(),
      weak_ln_ratio: z.number(),
      const_2n: z.number(),
      const_p: z.number(),
      p: z.number(),
      scaled: z.boolean(),
    })
  ),
  pass_flags: z.record(z.string(), z.boolean()),
});

export const sweepSchema = versioned({
  alphas: z.array(z.number()),
  x_norm_slope: z.number(),
  rows: z.array(
    z.object({
      alpha: z.number(),
      x_norm: z.number(),
      theta_probe: z.number(),
      oracle_sup_diff: z.number(),
      decay_exponent: z.number(),
      status: z.string(),
    })
  ),
});

export function readJsonArtifact<T>(path: string, schema: z.ZodType<T>): T {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaMismatch(`cannot parse JSON: ${path}`);
  }
  const version = (doc as { schema_version?: unknown }).schema_version;
  if (version !== SCHEMA_VERSION) {
    throw new SchemaMismatch(`unknown schema_version ${String(version)} in ${path}`);
  }
  const parsed = schema.safeParse(doc);
  if (!parsed.success) {
    throw new SchemaMismatch(`schema validation failed for ${path}: ${parsed.error.message}`);
  }
  return parsed.data;
}
