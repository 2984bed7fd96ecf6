#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { loadCsvFiles, LerRecord, SchemaError } from "./csv.js";
import { FigureKind, PlotSpec, renderSvg } from "./render.js";

export function run(argv: string[]): number {
  const parser = yargs(argv)
    .command("render", "render experiment CSVs to an SVG figure", (y) =>
      y
        .option("in", {
          type: "string",
          array: true,
          demandOption: true,
          describe: "input CSV path(s)",
        })
        .option("kind", {
          type: "string",
          choices: ["LER_VS_P", "LER_VS_ITERATIONS"] as const,
          demandOption: true,
        })
        .option("out", { type: "string", demandOption: true })
        .option("group-by", {
          type: "string",
          describe: "comma-separated grouping columns",
        })
        .option("title", { type: "string" }))
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });

  let args;
  try {
    args = parser.parseSync();
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  const kind = args.kind as FigureKind;
  const defaultGroups: (keyof LerRecord)[] =
    kind === "LER_VS_P"
      ? ["experiment", "d", "n_r"]
      : ["experiment", "d", "p", "n_r"];
  const groupBy = args["group-by"]
    ? ((args["group-by"] as string).split(",") as (keyof LerRecord)[])
    : defaultGroups;
  const spec: PlotSpec = { kind, groupBy, title: args.title as string | undefined };
  try {
    const records = loadCsvFiles(args.in as string[]);
    const svg = renderSvg(records, spec);
    writeFileSync(args.out as string, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  process.stderr.write(`wrote ${args.out}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exitCode = run(hideBin(process.argv));
}
