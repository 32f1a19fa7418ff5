/**
 * Command line: render one figure kind from solver artifacts.
 *
 *   expanderflow-figures --kind trace --input out/trace.csv --out trace.svg
 *   expanderflow-figures --kind profile --input a/profile.csv --input b/profile.csv --out psi.svg
 *   expanderflow-figures --kind decay --input verify/decay.csv --out decay.svg
 *   expanderflow-figures --kind defect --input verify/verification.json --out defect.svg
 *   expanderflow-figures --kind constants --input verify/verification.json --out constants.svg
 */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FigureKind, FigureSpec, describe, render } from "./figures.js";
import { SchemaMismatch } from "./schemas.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .option("kind", {
      choices: ["trace", "profile", "decay", "defect", "constants"] as const,
      demandOption: true,
    })
    .option("input", { type: "string", array: true, demandOption: true })
    .option("out", { type: "string", demandOption: true })
    .strict()
    .parse();

  const spec: FigureSpec = {
    kind: args.kind as FigureKind,
    inputs: args.input as string[],
    output: args.out,
  };
  try {
    render(spec);
    console.log(describe(spec));
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch) {
      console.error(`schema mismatch: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
