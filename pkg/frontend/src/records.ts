/**
 * Record-file schema objects and the pre-write self-check mirroring the
 * consumer's validation rules: a record that fails here is never written.
 */

export interface TokenObj {
  token: string;
  log_prob: number;
  entropy?: number;
  alt_dist?: [string, number][];
}

export interface BeamObj {
  text: string;
  seq_log_prob: number;
  tokens: TokenObj[];
}

export interface RecordObj {
  id: string;
  input: string;
  references: string[];
  task: string;
  beams: BeamObj[];
  dropout_samples?: BeamObj[];
}

const LOG_PROB_TOL = 1e-6;
const SEQ_SUM_TOL = 1e-4;
const ALT_SUM_TOL = 1e-6;

function checkBeam(beam: BeamObj, where: string): void {
  if (beam.tokens.length === 0) throw new Error(`${where}: empty token list`);
  if (!(beam.seq_log_prob <= LOG_PROB_TOL)) {
    throw new Error(`${where}: seq_log_prob ${beam.seq_log_prob} > 0`);
  }
  let sum = 0;
  for (const tok of beam.tokens) {
    if (!(tok.log_prob <= LOG_PROB_TOL)) {
      throw new Error(`${where}: token log_prob ${tok.log_prob} > 0`);
    }
    if (tok.entropy !== undefined && !(tok.entropy >= 0)) {
      throw new Error(`${where}: negative entropy ${tok.entropy}`);
    }
    if (tok.alt_dist) {
      let altSum = 0;
      let prev = Infinity;
      for (const [, p] of tok.alt_dist) {
        if (!(p > 0 && p <= 1)) throw new Error(`${where}: alt prob ${p}`);
        if (p > prev) throw new Error(`${where}: alt_dist not descending`);
        prev = p;
        altSum += p;
      }
      if (altSum > 1 + ALT_SUM_TOL) {
        throw new Error(`${where}: alt_dist sums to ${altSum}`);
      }
    }
    sum += tok.log_prob;
  }
  if (Math.abs(sum - beam.seq_log_prob) > SEQ_SUM_TOL) {
    throw new Error(
      `${where}: seq_log_prob ${beam.seq_log_prob} != token sum ${sum}`,
    );
  }
}

/** Throws on any invariant violation; called before a record is written. */
export function selfCheck(record: RecordObj): void {
  const where = `record ${record.id}`;
  if (!record.id) throw new Error("record with empty id");
  if (record.references.length === 0) {
    throw new Error(`${where}: no references`);
  }
  if (record.beams.length === 0) throw new Error(`${where}: no beams`);
  for (let i = 1; i < record.beams.length; i++) {
    if (record.beams[i].seq_log_prob > record.beams[i - 1].seq_log_prob) {
      throw new Error(`${where}: beams not sorted at position ${i}`);
    }
  }
  record.beams.forEach((b, i) => checkBeam(b, `${where} beam ${i}`));
  const samples = record.dropout_samples ?? [];
  if (samples.length !== 0 && samples.length !== 10) {
    throw new Error(`${where}: ${samples.length} dropout samples (need 0 or 10)`);
  }
  samples.forEach((s, i) => checkBeam(s, `${where} dropout ${i}`));
}
