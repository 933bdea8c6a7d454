/**
 * Beam search over the tiny model, capturing per-token log-probs and the
 * full-vocabulary entropy of every step's distribution.
 *
 * EOS terminates a hypothesis and is excluded from the emitted token list;
 * the emitted score is the sum of the emitted tokens' log-probs, and the
 * final hypotheses are ordered by that emitted score.
 */

import { EOS_ID, EncodedInput, MIN_OUTPUT_LEN, TinySeq2Seq, VOCAB } from "./model.js";

export interface ScoredToken {
  id: number;
  token: string;
  logProb: number;
  entropy: number;
}

export interface Hypothesis {
  ids: number[];
  tokens: ScoredToken[];
  /** Cumulative log-prob including the EOS step when terminated. */
  modelScore: number;
  /** Sum over emitted (non-EOS) tokens only. */
  emittedScore: number;
  state: Float64Array;
  done: boolean;
}

export function beamSearch(
  model: TinySeq2Seq,
  enc: EncodedInput,
  numBeams: number,
  maxLen: number,
  dropoutMask?: Float64Array,
): Hypothesis[] {
  let alive: Hypothesis[] = [
    {
      ids: [],
      tokens: [],
      modelScore: 0,
      emittedScore: 0,
      state: enc.state,
      done: false,
    },
  ];
  const done: Hypothesis[] = [];

  for (let t = 0; t < maxLen && alive.length > 0; t++) {
    const candidates: Hypothesis[] = [];
    for (const hyp of alive) {
      const { logProbs, entropy } = model.dist(enc, hyp.state, t, dropoutMask);
      for (let v = 0; v < model.vocabSize; v++) {
        const isEos = v === EOS_ID;
        if (isEos && t < MIN_OUTPUT_LEN) continue; // hard minimum length
        candidates.push({
          ids: isEos ? hyp.ids : [...hyp.ids, v],
          tokens: isEos
            ? hyp.tokens
            : [
                ...hyp.tokens,
                { id: v, token: VOCAB[v], logProb: logProbs[v], entropy },
              ],
          modelScore: hyp.modelScore + logProbs[v],
          emittedScore: hyp.emittedScore + (isEos ? 0 : logProbs[v]),
          state: hyp.state, // advanced lazily below for survivors
          done: isEos,
        });
      }
    }
    candidates.sort((a, b) => b.modelScore - a.modelScore);

    const nextAlive: Hypothesis[] = [];
    for (const cand of candidates) {
      if (cand.done) {
        if (done.length < 2 * numBeams) done.push(cand);
      } else if (nextAlive.length < numBeams) {
        nextAlive.push({
          ...cand,
          state: model.advance(cand.state, cand.ids[cand.ids.length - 1]),
        });
      }
      if (nextAlive.length >= numBeams && done.length >= 2 * numBeams) break;
    }
    alive = nextAlive;
  }

  // hypotheses still alive at maxLen count as finished without an EOS step
  const finished = [...done, ...alive];
  finished.sort((a, b) => b.emittedScore - a.emittedScore);
  return finished.slice(0, numBeams);
}

/**
 * Re-run the model along a fixed token path, returning each step's top-V
 * alternative distribution (softmax probabilities, descending).
 */
export function replayAltDists(
  model: TinySeq2Seq,
  enc: EncodedInput,
  ids: number[],
  topV: number,
  dropoutMask?: Float64Array,
): [string, number][][] {
  const out: [string, number][][] = [];
  let state = enc.state;
  for (let t = 0; t < ids.length; t++) {
    const { logProbs } = model.dist(enc, state, t, dropoutMask);
    const pairs: [string, number][] = [];
    for (let v = 0; v < model.vocabSize; v++) {
      pairs.push([VOCAB[v], Math.exp(logProbs[v])]);
    }
    pairs.sort((a, b) => b[1] - a[1]);
    out.push(pairs.slice(0, Math.min(topV, pairs.length)));
    state = model.advance(state, ids[t]);
  }
  return out;
}
