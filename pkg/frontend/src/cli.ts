/**
 * Harvester CLI.
 *
 *   node dist/cli.js --output records.jsonl [--n-inputs 20] [--beams 100]
 *     [--dropout-samples 10] [--top-v 32] [--seed 0] [--mode ancestral|beam]
 *     [--dataset toy-qa] [--split test] [--max-output-len 6]
 *     [--dropout-rate 0.1]
 */

import { parseArgs } from "node:util";

import { DEFAULT_CONFIG, harvest, HarvestConfig, writeRecordFile } from "./harvest.js";

function main(): number {
  const { values } = parseArgs({
    options: {
      output: { type: "string" },
      "n-inputs": { type: "string" },
      beams: { type: "string" },
      "dropout-samples": { type: "string" },
      "top-v": { type: "string" },
      seed: { type: "string" },
      mode: { type: "string" },
      dataset: { type: "string" },
      split: { type: "string" },
      "max-output-len": { type: "string" },
      "dropout-rate": { type: "string" },
    },
  });
  if (!values.output) {
    console.error("--output is required");
    return 2;
  }
  const mode = values.mode ?? DEFAULT_CONFIG.mode;
  if (mode !== "ancestral" && mode !== "beam") {
    console.error(`--mode must be ancestral or beam, got ${mode}`);
    return 2;
  }
  const config: HarvestConfig = {
    ...DEFAULT_CONFIG,
    outputPath: values.output,
    nInputs: values["n-inputs"] ? parseInt(values["n-inputs"], 10) : DEFAULT_CONFIG.nInputs,
    nBeams: values.beams ? parseInt(values.beams, 10) : DEFAULT_CONFIG.nBeams,
    dropoutSamples: values["dropout-samples"]
      ? parseInt(values["dropout-samples"], 10)
      : DEFAULT_CONFIG.dropoutSamples,
    topV: values["top-v"] ? parseInt(values["top-v"], 10) : DEFAULT_CONFIG.topV,
    seed: values.seed ? parseInt(values.seed, 10) : DEFAULT_CONFIG.seed,
    mode,
    datasetId: values.dataset ?? DEFAULT_CONFIG.datasetId,
    split: values.split ?? DEFAULT_CONFIG.split,
    maxOutputLen: values["max-output-len"]
      ? parseInt(values["max-output-len"], 10)
      : DEFAULT_CONFIG.maxOutputLen,
    dropoutRate: values["dropout-rate"]
      ? parseFloat(values["dropout-rate"])
      : DEFAULT_CONFIG.dropoutRate,
  };
  try {
    const result = harvest(config);
    writeRecordFile(result, config.outputPath);
    console.log(
      `harvested ${result.records.length} records ` +
        `(${result.skipped} skipped) -> ${config.outputPath}`,
    );
    return 0;
  } catch (err) {
    console.error(`harvest failed: ${(err as Error).message}`);
    return 1;
  }
}

process.exitCode = main();
