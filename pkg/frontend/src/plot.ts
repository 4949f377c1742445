#!/usr/bin/env node
/**
 * plot --csv FILE [--metric poe] [--group allocation] [--logy] --out FILE.svg
 *
 * Renders one error-barred line per (algorithm, allocation) group of a sweep
 * CSV produced by the simulation harness. Read-only over the CSV; exits
 * nonzero with the offending column name on schema mismatch.
 */

import * as fs from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { GROUP_COLUMNS, METRICS, SchemaError, groupSeries } from "./csv.js";
import { renderChart } from "./svg.js";

const argv = yargs(hideBin(process.argv))
  .option("csv", { type: "string", demandOption: true, describe: "sweep CSV path" })
  .option("metric", {
    type: "string",
    default: "poe",
    describe: `metric to plot (${Object.keys(METRICS).join(", ")})`,
  })
  .option("group", {
    type: "string",
    describe: `column(s) defining one series, comma separated ` +
      `(default: ${GROUP_COLUMNS.join(",")})`,
  })
  .option("logy", { type: "boolean", default: false, describe: "log-scale y axis" })
  .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
  .strict()
  .parseSync();

try {
  const groupBy = argv.group ? argv.group.split(",").map((s) => s.trim()) : GROUP_COLUMNS;
  const text = fs.readFileSync(argv.csv, "utf-8");
  const series = groupSeries(text, argv.metric, groupBy);
  const svg = renderChart(series, METRICS[argv.metric].label, argv.logy);
  fs.writeFileSync(argv.out, svg);
} catch (err) {
  if (err instanceof SchemaError) {
    console.error(`plot: ${err.message}`);
    process.exit(1);
  }
  throw err;
}
