/**
 * Dropout-activated sampling: 10 decodes per input with hidden-unit dropout,
 * capturing token log-probs, step entropies, and top-V alternative
 * distributions. Two modes: ancestral sampling (mask redrawn each step) or
 * beam decoding under a fixed per-sample mask.
 */

import { beamSearch, replayAltDists, ScoredToken } from "./beamSearch.js";
import { EOS_ID, EncodedInput, MIN_OUTPUT_LEN, TinySeq2Seq, VOCAB } from "./model.js";
import { Rng } from "./rng.js";

export type DropoutMode = "ancestral" | "beam";

export interface SampledSequence {
  ids: number[];
  tokens: ScoredToken[];
  emittedScore: number;
  altDists: [string, number][][];
}

function drawMask(rng: Rng, size: number, rate: number): Float64Array {
  const keep = 1.0 - rate;
  const mask = new Float64Array(size);
  for (let i = 0; i < size; i++) {
    mask[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  return mask;
}

function sampleToken(logProbs: Float64Array, rng: Rng): number {
  const u = rng.next();
  let acc = 0;
  for (let v = 0; v < logProbs.length; v++) {
    acc += Math.exp(logProbs[v]);
    if (u < acc) return v;
  }
  return logProbs.length - 1;
}

function topV(logProbs: Float64Array, limit: number): [string, number][] {
  const pairs: [string, number][] = [];
  for (let v = 0; v < logProbs.length; v++) {
    pairs.push([VOCAB[v], Math.exp(logProbs[v])]);
  }
  pairs.sort((a, b) => b[1] - a[1]);
  return pairs.slice(0, Math.min(limit, pairs.length));
}

function sampleAncestral(
  model: TinySeq2Seq,
  enc: EncodedInput,
  rng: Rng,
  rate: number,
  maxLen: number,
  topVLimit: number,
): SampledSequence {
  let state = enc.state;
  const ids: number[] = [];
  const tokens: ScoredToken[] = [];
  const altDists: [string, number][][] = [];
  let emittedScore = 0;
  for (let t = 0; t < maxLen; t++) {
    const mask = drawMask(rng.derive(`mask:${t}`), model.hidden, rate);
    const { logProbs, entropy } = model.dist(enc, state, t, mask);
    let chosen = sampleToken(logProbs, rng);
    if (chosen === EOS_ID && t < MIN_OUTPUT_LEN) {
      // hard minimum length: fall back to the best non-EOS token
      chosen = 0;
      for (let v = 1; v < EOS_ID; v++) {
        if (logProbs[v] > logProbs[chosen]) chosen = v;
      }
    }
    if (chosen === EOS_ID) break;
    ids.push(chosen);
    tokens.push({
      id: chosen,
      token: VOCAB[chosen],
      logProb: logProbs[chosen],
      entropy,
    });
    altDists.push(topV(logProbs, topVLimit));
    emittedScore += logProbs[chosen];
    state = model.advance(state, chosen);
  }
  return { ids, tokens, emittedScore, altDists };
}

function sampleBeam(
  model: TinySeq2Seq,
  enc: EncodedInput,
  rng: Rng,
  rate: number,
  maxLen: number,
  topVLimit: number,
): SampledSequence {
  const mask = drawMask(rng.derive("mask"), model.hidden, rate);
  const top = beamSearch(model, enc, 4, maxLen, mask)[0];
  const altDists = replayAltDists(model, enc, top.ids, topVLimit, mask);
  return {
    ids: top.ids,
    tokens: top.tokens,
    emittedScore: top.emittedScore,
    altDists,
  };
}

export function sampleDropout(
  model: TinySeq2Seq,
  enc: EncodedInput,
  opts: {
    count: number;
    rate: number;
    maxLen: number;
    topV: number;
    mode: DropoutMode;
    rng: Rng;
  },
): SampledSequence[] {
  const samples: SampledSequence[] = [];
  for (let s = 0; s < opts.count; s++) {
    const rng = opts.rng.derive(`sample:${s}`);
    samples.push(
      opts.mode === "beam"
        ? sampleBeam(model, enc, rng, opts.rate, opts.maxLen, opts.topV)
        : sampleAncestral(model, enc, rng, opts.rate, opts.maxLen, opts.topV),
    );
  }
  return samples;
}
