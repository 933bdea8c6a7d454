/**
 * Harvest orchestration: runs beam search (and optionally dropout sampling)
 * over the built-in dataset and writes a record file in the consumer's
 * line-oriented schema, preceded by one #meta header line.
 */

import { writeFileSync } from "node:fs";

import { beamSearch, Hypothesis } from "./beamSearch.js";
import { toyQaDataset } from "./dataset.js";
import { DropoutMode, SampledSequence, sampleDropout } from "./dropout.js";
import { EOS_TOKEN, TinySeq2Seq, tokensToText } from "./model.js";
import { BeamObj, RecordObj, selfCheck } from "./records.js";
import { Rng } from "./rng.js";

export interface HarvestConfig {
  modelId: string;
  datasetId: string;
  split: string;
  nInputs: number;
  nBeams: number;
  dropoutSamples: number;
  topV: number;
  maxInputLen: number;
  maxOutputLen: number;
  dropoutRate: number;
  mode: DropoutMode;
  device: string;
  seed: number;
  outputPath: string;
}

export const DEFAULT_CONFIG: Omit<HarvestConfig, "outputPath"> = {
  modelId: "tiny-rnn-v1",
  datasetId: "toy-qa",
  split: "test",
  nInputs: 20,
  nBeams: 100,
  dropoutSamples: 10,
  topV: 32,
  maxInputLen: 16,
  maxOutputLen: 6,
  dropoutRate: 0.1,
  mode: "ancestral",
  device: "cpu",
  seed: 0,
};

export function validateConfig(config: HarvestConfig): void {
  if (config.nBeams < 2) throw new Error(`nBeams must be >= 2, got ${config.nBeams}`);
  if (config.dropoutSamples !== 0 && config.dropoutSamples !== 10) {
    throw new Error(`dropoutSamples must be 0 or 10, got ${config.dropoutSamples}`);
  }
  if (config.topV < 1) throw new Error(`topV must be >= 1, got ${config.topV}`);
  if (config.nInputs < 1) throw new Error("nInputs must be >= 1");
  if (config.maxOutputLen < 2) throw new Error("maxOutputLen must be >= 2");
  if (!(config.dropoutRate > 0 && config.dropoutRate < 1)) {
    throw new Error(`dropoutRate must be in (0, 1), got ${config.dropoutRate}`);
  }
}

function hypothesisToBeam(hyp: Hypothesis): BeamObj {
  return {
    text: tokensToText(hyp.ids),
    seq_log_prob: hyp.emittedScore,
    tokens: hyp.tokens.map((t) => ({
      token: t.token,
      log_prob: t.logProb,
      entropy: t.entropy,
    })),
  };
}

function sampleToBeam(sample: SampledSequence): BeamObj {
  return {
    text: tokensToText(sample.ids),
    seq_log_prob: sample.emittedScore,
    tokens: sample.tokens.map((t, i) => ({
      token: t.token,
      log_prob: t.logProb,
      entropy: t.entropy,
      alt_dist: sample.altDists[i],
    })),
  };
}

export interface HarvestResult {
  records: RecordObj[];
  skipped: number;
  metaLine: string;
}

export function harvest(config: HarvestConfig): HarvestResult {
  validateConfig(config);
  const model = new TinySeq2Seq(config.seed);
  const items = toyQaDataset(
    config.datasetId,
    config.split,
    config.nInputs,
    model,
    config.seed,
    config.maxOutputLen,
  );
  const rootRng = new Rng(config.seed).derive("harvest");

  const records: RecordObj[] = [];
  let skipped = 0;
  for (const item of items) {
    try {
      const enc = model.encode(item.input);
      const beams = beamSearch(model, enc, config.nBeams, config.maxOutputLen);
      const record: RecordObj = {
        id: item.id,
        input: item.input,
        references: [item.reference],
        task: "qa",
        beams: beams.map(hypothesisToBeam),
      };
      if (config.dropoutSamples > 0) {
        const samples = sampleDropout(model, enc, {
          count: config.dropoutSamples,
          rate: config.dropoutRate,
          maxLen: config.maxOutputLen,
          topV: config.topV,
          mode: config.mode,
          rng: rootRng.derive(`dropout:${item.id}`),
        });
        record.dropout_samples = samples.map(sampleToBeam);
      }
      selfCheck(record);
      records.push(record);
    } catch (err) {
      skipped += 1;
      console.error(`skipping ${item.id}: ${(err as Error).message}`);
    }
  }

  const metaLine =
    "#meta " +
    JSON.stringify({
      model: config.modelId,
      dataset: config.datasetId,
      split: config.split,
      n_beams: config.nBeams,
      dropout_samples: config.dropoutSamples,
      dropout_mode: config.mode,
      dropout_rate: config.dropoutRate,
      top_v: config.topV,
      seed: config.seed,
      device: config.device,
      special_tokens_excluded: [EOS_TOKEN],
    });
  return { records, skipped, metaLine };
}

export function writeRecordFile(result: HarvestResult, path: string): void {
  const lines = [result.metaLine, ...result.records.map((r) => JSON.stringify(r))];
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

/** Beam-search-only harvest: beams populated, no dropout sampling. */
export function harvestBeams(config: HarvestConfig): HarvestResult {
  return harvest({ ...config, dropoutSamples: 0 });
}

/** Harvest with dropout sampling: beams plus 10 dropout samples per input. */
export function harvestDropout(config: HarvestConfig): HarvestResult {
  return harvest({ ...config, dropoutSamples: 10 });
}
