import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import {
  DEFAULT_CONFIG,
  harvest,
  harvestBeams,
  harvestDropout,
  validateConfig,
  writeRecordFile,
} from "../src/harvest.js";
import { RecordObj, selfCheck } from "../src/records.js";

function config(overrides: object = {}) {
  return {
    ...DEFAULT_CONFIG,
    nInputs: 5,
    nBeams: 4,
    outputPath: "",
    ...overrides,
  };
}

describe("config validation", () => {
  it("rejects bad beam counts, dropout counts, and top-v", () => {
    expect(() => validateConfig(config({ nBeams: 1 }))).toThrow(/nBeams/);
    expect(() => validateConfig(config({ dropoutSamples: 3 }))).toThrow(/0 or 10/);
    expect(() => validateConfig(config({ topV: 0 }))).toThrow(/topV/);
    expect(() => validateConfig(config({ dropoutRate: 0 }))).toThrow(/dropoutRate/);
    expect(() => validateConfig(config())).not.toThrow();
  });
});

describe("harvest", () => {
  it("emits one record per input with sorted beams and 10 dropout samples", () => {
    const result = harvest(config());
    expect(result.records).toHaveLength(5);
    expect(result.skipped).toBe(0);
    for (const rec of result.records) {
      expect(rec.beams).toHaveLength(4);
      for (let i = 1; i < rec.beams.length; i++) {
        expect(rec.beams[i].seq_log_prob).toBeLessThanOrEqual(
          rec.beams[i - 1].seq_log_prob,
        );
      }
      expect(rec.dropout_samples).toHaveLength(10);
      expect(rec.references).toHaveLength(1);
      expect(rec.task).toBe("qa");
    }
  });

  it("records satisfy their own pre-write self-check", () => {
    for (const rec of harvest(config({ nInputs: 8 })).records) {
      expect(() => selfCheck(rec)).not.toThrow();
    }
  });

  it("beam-only harvest omits dropout_samples", () => {
    const result = harvestBeams(config());
    for (const rec of result.records) {
      expect(rec.dropout_samples).toBeUndefined();
    }
  });

  it("dropout harvest always carries 10 samples", () => {
    const result = harvestDropout(config({ dropoutSamples: 0 }));
    for (const rec of result.records) {
      expect(rec.dropout_samples).toHaveLength(10);
    }
  });

  it("alt dists are capped at the vocabulary size even when topV is larger", () => {
    const result = harvest(config({ topV: 32 }));
    const sample = result.records[0].dropout_samples![0];
    for (const tok of sample.tokens) {
      expect(tok.alt_dist!.length).toBeLessThanOrEqual(21);
    }
  });

  it("is deterministic: same seed gives byte-identical files", () => {
    const dir = mkdtempSync(join(tmpdir(), "harvest-"));
    const p1 = join(dir, "a.jsonl");
    const p2 = join(dir, "b.jsonl");
    writeRecordFile(harvest(config({ seed: 5 })), p1);
    writeRecordFile(harvest(config({ seed: 5 })), p2);
    expect(readFileSync(p1, "utf-8")).toBe(readFileSync(p2, "utf-8"));
    const p3 = join(dir, "c.jsonl");
    writeRecordFile(harvest(config({ seed: 6 })), p3);
    expect(readFileSync(p3, "utf-8")).not.toBe(readFileSync(p1, "utf-8"));
  });

  it("writes the #meta header first with the mode and exclusions recorded", () => {
    const dir = mkdtempSync(join(tmpdir(), "harvest-"));
    const path = join(dir, "meta.jsonl");
    writeRecordFile(harvest(config({ mode: "beam" })), path);
    const first = readFileSync(path, "utf-8").split("\n")[0];
    expect(first.startsWith("#meta ")).toBe(true);
    const meta = JSON.parse(first.slice("#meta ".length));
    expect(meta.dropout_mode).toBe("beam");
    expect(meta.special_tokens_excluded).toEqual(["<eos>"]);
    expect(meta.n_beams).toBe(4);
  });
});

describe("selfCheck", () => {
  const good: RecordObj = {
    id: "r1",
    input: "q",
    references: ["ref"],
    task: "qa",
    beams: [
      {
        text: "copper",
        seq_log_prob: -0.5,
        tokens: [{ token: "copper", log_prob: -0.5, entropy: 0.2 }],
      },
    ],
  };

  it("accepts a valid record", () => {
    expect(() => selfCheck(good)).not.toThrow();
  });

  it("rejects seq/token-sum mismatch beyond 1e-4", () => {
    const bad = structuredClone(good);
    bad.beams[0].seq_log_prob = -0.51;
    expect(() => selfCheck(bad)).toThrow(/token sum/);
  });

  it("rejects unsorted beams and positive log-probs", () => {
    const unsorted = structuredClone(good);
    unsorted.beams.push(structuredClone(good.beams[0]));
    unsorted.beams[1].seq_log_prob = -0.1;
    unsorted.beams[1].tokens[0].log_prob = -0.1;
    expect(() => selfCheck(unsorted)).toThrow(/not sorted/);

    const positive = structuredClone(good);
    positive.beams[0].tokens[0].log_prob = 0.5;
    positive.beams[0].seq_log_prob = 0.5;
    expect(() => selfCheck(positive)).toThrow(/> 0/);
  });

  it("rejects bad dropout sample counts and bad alt dists", () => {
    const threeSamples = structuredClone(good);
    threeSamples.dropout_samples = [
      structuredClone(good.beams[0]),
      structuredClone(good.beams[0]),
      structuredClone(good.beams[0]),
    ];
    expect(() => selfCheck(threeSamples)).toThrow(/0 or 10/);

    const badAlt = structuredClone(good);
    badAlt.beams[0].tokens[0].alt_dist = [
      ["copper", 0.3],
      ["violet", 0.6],
    ];
    expect(() => selfCheck(badAlt)).toThrow(/descending/);
  });
});
