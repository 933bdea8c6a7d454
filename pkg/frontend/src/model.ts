/**
 * Tiny self-contained seq2seq model: a seeded tanh-RNN decoder over a small
 * word vocabulary, conditioned on the input text through its initial state
 * and an input-specific answer path. Every step yields a full softmax over
 * the vocabulary, so beam search, entropies, and dropout sampling are all
 * genuine. Peakedness varies per input (the `sharpness` latent), which is
 * what downstream confidence metrics are supposed to pick up.
 */

import { Rng, hashString } from "./rng.js";

export const ANSWER_WORDS = [
  "copper", "violet", "maple", "ember", "quartz",
  "falcon", "harbor", "tundra", "cedar", "onyx",
];
export const FILLER_WORDS = [
  "mist", "gravel", "lantern", "prism", "willow",
  "summit", "raven", "delta", "coral", "flint",
];
export const EOS_TOKEN = "<eos>";
export const VOCAB: string[] = [...ANSWER_WORDS, ...FILLER_WORDS, EOS_TOKEN];
export const EOS_ID = VOCAB.length - 1;
const FILLER_OFFSET = ANSWER_WORDS.length;

// The answer path gets a constant bias, so gaps between the top beam and
// the deep (filler) tail are sharpness-free noise; sharpness only controls
// how far the single runner-up alternative is pushed below the top token.
// Confidence in the head, noise in the tail.
const ANSWER_BIAS = 5.0;
const ALT_GAP = 1.2;
const BASE_SCALE = 0.2;
const FILLER_JITTER = 0.8;
const EOS_EARLY_PENALTY = 4.0;
const ANSWER_LEN = 3;

/** Decoders enforce this as a hard minimum emitted length; EOS-excluded
 * sequence scores would otherwise favor degenerate short decodes. */
export const MIN_OUTPUT_LEN = ANSWER_LEN;

export interface EncodedInput {
  state: Float64Array;
  answer: number[];
  altAnswer: number[];
  sharpness: number;
  fillerJitter: Float64Array;
}

export interface StepDist {
  logProbs: Float64Array;
  entropy: number;
}

function logSoftmax(logits: Float64Array): StepDist {
  let max = -Infinity;
  for (const v of logits) if (v > max) max = v;
  let sum = 0;
  for (const v of logits) sum += Math.exp(v - max);
  const logZ = max + Math.log(sum);
  const logProbs = new Float64Array(logits.length);
  let entropy = 0;
  for (let i = 0; i < logits.length; i++) {
    const lp = logits[i] - logZ;
    logProbs[i] = lp;
    const p = Math.exp(lp);
    if (p > 0) entropy -= p * lp;
  }
  return { logProbs, entropy };
}

export class TinySeq2Seq {
  readonly hidden: number;
  readonly vocabSize = VOCAB.length;
  private readonly recur: Float64Array; // hidden x hidden
  private readonly embed: Float64Array; // vocab x hidden
  private readonly out: Float64Array; // vocab x hidden
  private readonly inputEmbed: Float64Array; // 64 hash buckets x hidden

  constructor(readonly seed: number, hidden = 24) {
    this.hidden = hidden;
    const rng = new Rng(seed).derive("weights");
    const scale = 1.0 / Math.sqrt(hidden);
    this.recur = this.randomMatrix(rng, hidden * hidden, scale);
    this.embed = this.randomMatrix(rng, this.vocabSize * hidden, scale);
    this.out = this.randomMatrix(rng, this.vocabSize * hidden, 1.0);
    this.inputEmbed = this.randomMatrix(rng, 64 * hidden, 1.0);
  }

  private randomMatrix(rng: Rng, size: number, scale: number): Float64Array {
    const m = new Float64Array(size);
    for (let i = 0; i < size; i++) m[i] = rng.normal() * scale;
    return m;
  }

  /** Condition on the input text; derives state, answer path, sharpness. */
  encode(input: string): EncodedInput {
    const h = this.hidden;
    const state = new Float64Array(h);
    for (const word of input.toLowerCase().split(/\s+/)) {
      if (!word) continue;
      const bucket = hashString(word) % 64;
      for (let i = 0; i < h; i++) state[i] += this.inputEmbed[bucket * h + i];
    }
    for (let i = 0; i < h; i++) state[i] = Math.tanh(state[i]);

    const rng = new Rng(this.seed).derive(`input:${input}`);
    const answer: number[] = [];
    const altAnswer: number[] = [];
    for (let t = 0; t < ANSWER_LEN; t++) {
      const a = rng.int(ANSWER_WORDS.length);
      answer.push(a);
      altAnswer.push((a + 1 + rng.int(ANSWER_WORDS.length - 1)) % ANSWER_WORDS.length);
    }
    const sharpness = 0.6 + 2.4 * rng.next();
    const fillerJitter = new Float64Array(FILLER_WORDS.length);
    for (let i = 0; i < FILLER_WORDS.length; i++) {
      fillerJitter[i] = rng.normal() * FILLER_JITTER;
    }
    return { state, answer, altAnswer, sharpness, fillerJitter };
  }

  /** Advance the decoder state after consuming a token. */
  advance(state: Float64Array, tokenId: number): Float64Array {
    const h = this.hidden;
    const next = new Float64Array(h);
    for (let i = 0; i < h; i++) {
      let acc = this.embed[tokenId * h + i];
      for (let j = 0; j < h; j++) acc += this.recur[i * h + j] * state[j];
      next[i] = Math.tanh(acc);
    }
    return next;
  }

  /**
   * Next-token distribution at decode step t. `dropoutMask`, when given,
   * zeroes hidden units (inverted scaling applied by the caller's mask).
   */
  dist(
    enc: EncodedInput,
    state: Float64Array,
    t: number,
    dropoutMask?: Float64Array,
  ): StepDist {
    const h = this.hidden;
    const logits = new Float64Array(this.vocabSize);
    for (let v = 0; v < this.vocabSize; v++) {
      let acc = 0;
      for (let j = 0; j < h; j++) {
        const unit = dropoutMask ? state[j] * dropoutMask[j] : state[j];
        acc += this.out[v * h + j] * unit;
      }
      logits[v] = acc * BASE_SCALE;
    }
    for (let i = 0; i < FILLER_WORDS.length; i++) {
      logits[FILLER_OFFSET + i] += enc.fillerJitter[i];
    }
    if (t < enc.answer.length) {
      logits[enc.answer[t]] += ANSWER_BIAS;
      if (t === enc.answer.length - 1) {
        logits[enc.altAnswer[t]] += ANSWER_BIAS - enc.sharpness * ALT_GAP;
      }
      logits[EOS_ID] -= EOS_EARLY_PENALTY;
    } else {
      logits[EOS_ID] += ANSWER_BIAS;
    }
    return logSoftmax(logits);
  }

  /** Clean greedy decode (no dropout); returns token ids without EOS. */
  greedy(enc: EncodedInput, maxLen: number): number[] {
    let state = enc.state;
    const out: number[] = [];
    for (let t = 0; t < maxLen; t++) {
      const { logProbs } = this.dist(enc, state, t);
      const limit = t < MIN_OUTPUT_LEN ? EOS_ID : this.vocabSize;
      let best = 0;
      for (let v = 1; v < limit; v++) {
        if (logProbs[v] > logProbs[best]) best = v;
      }
      if (best === EOS_ID) break;
      out.push(best);
      state = this.advance(state, best);
    }
    return out;
  }
}

export function tokensToText(ids: number[]): string {
  return ids.map((id) => VOCAB[id]).join(" ");
}
