/**
 * EEGC container writer/reader, byte-compatible with the pipeline's format.
 *
 * Layout (little-endian):
 *   magic "EEGC" | version u16 | n_trials u32
 *   per trial: subject u16 | trial u16 | channels u16 | sample_rate f64 |
 *              n_samples u32 | valence f64 | arousal f64 |
 *              payload f32 x channels x n_samples (channel-major)
 */

export const EEGC_MAGIC = 'EEGC';
export const EEGC_VERSION = 1;

const TRIAL_HEADER_BYTES = 2 + 2 + 2 + 8 + 4 + 8 + 8;

export class EegcError extends Error {}

export interface EegcTrial {
  subjectId: number;
  trialId: number;
  channels: number;
  sampleRateHz: number;
  nSamples: number;
  valence: number;
  arousal: number;
  /** Raw little-endian float32 payload, channels x nSamples. */
  payload: Buffer;
}

export function encodeContainer(trials: EegcTrial[]): Buffer {
  let size = 10;
  for (const t of trials) {
    size += TRIAL_HEADER_BYTES + t.payload.length;
  }
  const buf = Buffer.alloc(size);
  buf.write(EEGC_MAGIC, 0, 'latin1');
  buf.writeUInt16LE(EEGC_VERSION, 4);
  buf.writeUInt32LE(trials.length, 6);
  let off = 10;
  for (const t of trials) {
    if (t.payload.length !== t.channels * t.nSamples * 4) {
      throw new EegcError(
        `trial ${t.trialId}: payload ${t.payload.length} bytes does not match ` +
          `${t.channels} x ${t.nSamples} float32`,
      );
    }
    if (t.valence < 1 || t.valence > 9 || t.arousal < 1 || t.arousal > 9) {
      throw new EegcError(`trial ${t.trialId}: ratings must lie in [1, 9]`);
    }
    buf.writeUInt16LE(t.subjectId, off);
    buf.writeUInt16LE(t.trialId, off + 2);
    buf.writeUInt16LE(t.channels, off + 4);
    buf.writeDoubleLE(t.sampleRateHz, off + 6);
    buf.writeUInt32LE(t.nSamples, off + 14);
    buf.writeDoubleLE(t.valence, off + 18);
    buf.writeDoubleLE(t.arousal, off + 26);
    t.payload.copy(buf, off + TRIAL_HEADER_BYTES);
    off += TRIAL_HEADER_BYTES + t.payload.length;
  }
  return buf;
}

export function decodeContainer(buf: Buffer): EegcTrial[] {
  if (buf.length < 10 || buf.subarray(0, 4).toString('latin1') !== EEGC_MAGIC) {
    throw new EegcError('bad EEGC magic');
  }
  const version = buf.readUInt16LE(4);
  if (version !== EEGC_VERSION) {
    throw new EegcError(`unsupported EEGC version ${version}`);
  }
  const nTrials = buf.readUInt32LE(6);
  const trials: EegcTrial[] = [];
  let off = 10;
  for (let i = 0; i < nTrials; i++) {
    if (off + TRIAL_HEADER_BYTES > buf.length) {
      throw new EegcError(`trial ${i}: header truncated`);
    }
    const trial: EegcTrial = {
      subjectId: buf.readUInt16LE(off),
      trialId: buf.readUInt16LE(off + 2),
      channels: buf.readUInt16LE(off + 4),
      sampleRateHz: buf.readDoubleLE(off + 6),
      nSamples: buf.readUInt32LE(off + 14),
      valence: buf.readDoubleLE(off + 18),
      arousal: buf.readDoubleLE(off + 26),
      payload: Buffer.alloc(0),
    };
    const payloadLen = trial.channels * trial.nSamples * 4;
    off += TRIAL_HEADER_BYTES;
    if (off + payloadLen > buf.length) {
      throw new EegcError(`trial ${i}: payload truncated`);
    }
    trial.payload = Buffer.from(buf.subarray(off, off + payloadLen));
    off += payloadLen;
    trials.push(trial);
  }
  if (off !== buf.length) {
    throw new EegcError(`${buf.length - off} trailing bytes after the last trial`);
  }
  return trials;
}
