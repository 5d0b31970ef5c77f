#!/usr/bin/env node
/** report-plots: render figures from lfperf CSV outputs.
 * Exit codes: 0 ok, 1 runtime failure, 2 bad input. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { SchemaError } from "./csv.js";
import { plotInterarrival } from "./interarrival.js";
import { plotThroughput } from "./throughput.js";

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName("report-plots")
      .command(
        "throughput",
        "throughput vs threads, one facet per structure and key range",
        (y) => y
          .option("in", { type: "array", demandOption: true, describe: "scenario CSVs" })
          .option("out", { type: "string", demandOption: true, describe: "output directory" }),
        (args) => {
          const facets = plotThroughput((args.in as string[]).map(String), args.out);
          for (const facet of facets) {
            console.log(`${facet.path}: ${facet.series} update-ratio series`);
          }
        })
      .command(
        "interarrival",
        "empirical gap CDFs against mean-matched exponentials",
        (y) => y
          .option("in", { type: "string", demandOption: true, describe: "gap CSV" })
          .option("out", { type: "string", demandOption: true, describe: "output directory" }),
        (args) => {
          const result = plotInterarrival(args.in, args.out);
          console.log(`${result.path}: ${result.keys.length} tracked keys`);
        })
      .demandCommand(1)
      .strict()
      .fail((msg, err) => { throw err ?? new SchemaError(msg); })
      .parseAsync();
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("report-plots")) {
  main(hideBin(process.argv)).then((code) => process.exit(code));
}
