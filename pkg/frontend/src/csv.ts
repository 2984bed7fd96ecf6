import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface LerRecord {
  experiment: string;
  d: number;
  p: number;
  n_r: number;
  num_cnots: number;
  shots: number;
  failures: number;
  ler: number;
  ci_low: number;
  ci_high: number;
  mean_iterations: number;
  seed: number;
}

export const REQUIRED_COLUMNS: (keyof LerRecord)[] = [
  "experiment", "d", "p", "n_r", "num_cnots", "shots", "failures",
  "ler", "ci_low", "ci_high", "mean_iterations", "seed",
];

export class SchemaError extends Error {}

/** Parse one experiment CSV, enforcing the column contract. */
export function parseCsv(text: string, source = "<csv>"): LerRecord[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${source}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!fields.includes(column)) {
      throw new SchemaError(`${source}: missing column '${column}'`);
    }
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  return parsed.data.map((row, i) => {
    const num = (key: keyof LerRecord): number => {
      const value = Number(row[key]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(
          `${source}: row ${i + 1}: column '${key}' is not a number`);
      }
      return value;
    };
    return {
      experiment: row.experiment,
      d: num("d"),
      p: num("p"),
      n_r: num("n_r"),
      num_cnots: num("num_cnots"),
      shots: num("shots"),
      failures: num("failures"),
      ler: num("ler"),
      ci_low: num("ci_low"),
      ci_high: num("ci_high"),
      mean_iterations: num("mean_iterations"),
      seed: num("seed"),
    };
  });
}

export function loadCsvFiles(paths: string[]): LerRecord[] {
  const records: LerRecord[] = [];
  for (const path of paths) {
    records.push(...parseCsv(readFileSync(path, "utf-8"), path));
  }
  return records;
}
