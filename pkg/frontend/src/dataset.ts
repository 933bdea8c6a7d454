/**
 * Built-in QA-style dataset: templated questions whose reference answer is
 * the clean model's own greedy decode for a sharpness-dependent fraction of
 * inputs and a distractor otherwise, so harvested confidence has signal to
 * recover downstream.
 */

import { ANSWER_WORDS, TinySeq2Seq, tokensToText } from "./model.js";
import { Rng } from "./rng.js";

const TOPICS = [
  "ridge", "valley", "market", "bridge", "orchard", "quarry", "lagoon",
  "meadow", "castle", "mill", "grove", "canyon", "plaza", "wharf",
];

export interface DatasetItem {
  id: string;
  input: string;
  reference: string;
}

export function toyQaDataset(
  datasetId: string,
  split: string,
  count: number,
  model: TinySeq2Seq,
  seed: number,
  maxOutputLen: number,
): DatasetItem[] {
  const rng = new Rng(seed).derive(`dataset:${datasetId}:${split}`);
  const items: DatasetItem[] = [];
  for (let i = 0; i < count; i++) {
    const topic = TOPICS[rng.int(TOPICS.length)];
    const other = TOPICS[rng.int(TOPICS.length)];
    const input = `which marker names the ${topic} near the ${other} site ${i}`;
    const enc = model.encode(input);
    const greedy = model.greedy(enc, maxOutputLen);

    // correct-reference probability grows with the input's sharpness
    const pRight = 0.15 + 0.75 * ((enc.sharpness - 0.6) / 2.4);
    let reference: string;
    if (rng.next() < pRight && greedy.length > 0) {
      reference = tokensToText(greedy);
    } else {
      const used = new Set(greedy);
      const pool = ANSWER_WORDS.map((_, id) => id).filter((id) => !used.has(id));
      const distractor: number[] = [];
      for (let t = 0; t < 3; t++) {
        distractor.push(pool[rng.int(pool.length)]);
      }
      reference = tokensToText(distractor);
    }
    items.push({ id: `${datasetId}-${split}-${i}`, input, reference });
  }
  return items;
}
