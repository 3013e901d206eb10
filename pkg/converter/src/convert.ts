/**
 * DEAP preprocessed subject file -> EEGC container.
 *
 * Input: an NPZ (or a pair of NPY files) holding
 *   data   float array, 40 trials x 40 channels x 8064 samples at 128 Hz
 *   labels float array, 40 x 4 ratings (valence, arousal, dominance, liking)
 *
 * The first 32 channels are EEG and are kept; the trailing peripheral
 * channels are dropped. The leading 3 s pre-trial baseline (384 samples) is
 * trimmed, leaving 60 s of signal per trial. Sample values are stored as
 * float32; ratings are copied as-is.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { encodeContainer, EegcTrial } from './eegc.js';
import { FormatError, NpyArray, parseNpy, parseNpz } from './npy.js';

export const DEAP_TRIALS = 40;
export const DEAP_CHANNELS = 40;
export const DEAP_SAMPLES = 8064;
export const EEG_CHANNELS = 32;
export const BASELINE_SAMPLES = 384; // 3 s at 128 Hz
export const SAMPLE_RATE_HZ = 128;

export class InputShapeError extends Error {}

export interface DeapSubject {
  data: NpyArray;
  labels: NpyArray;
}

export function loadSubject(inPath: string): DeapSubject {
  if (fs.statSync(inPath).isDirectory()) {
    const data = parseNpy(fs.readFileSync(path.join(inPath, 'data.npy')));
    const labels = parseNpy(fs.readFileSync(path.join(inPath, 'labels.npy')));
    return { data, labels };
  }
  const arrays = parseNpz(fs.readFileSync(inPath));
  if (!arrays.data || !arrays.labels) {
    throw new FormatError(
      `archive must contain "data" and "labels" arrays, found [${Object.keys(arrays).join(', ')}]`,
    );
  }
  return { data: arrays.data, labels: arrays.labels };
}

function checkShape(subject: DeapSubject): void {
  const d = subject.data.shape;
  const l = subject.labels.shape;
  if (d.length !== 3 || d[0] !== DEAP_TRIALS || d[1] !== DEAP_CHANNELS || d[2] !== DEAP_SAMPLES) {
    throw new InputShapeError(
      `data must be ${DEAP_TRIALS} x ${DEAP_CHANNELS} x ${DEAP_SAMPLES}, got (${d.join(', ')})`,
    );
  }
  if (l.length !== 2 || l[0] !== DEAP_TRIALS || l[1] !== 4) {
    throw new InputShapeError(`labels must be ${DEAP_TRIALS} x 4, got (${l.join(', ')})`);
  }
}

export function subjectToTrials(subject: DeapSubject, subjectId: number): EegcTrial[] {
  checkShape(subject);
  const { data, labels } = subject;
  const keptSamples = DEAP_SAMPLES - BASELINE_SAMPLES;
  const trials: EegcTrial[] = [];
  for (let t = 0; t < DEAP_TRIALS; t++) {
    const payload = Buffer.alloc(EEG_CHANNELS * keptSamples * 4);
    let off = 0;
    for (let ch = 0; ch < EEG_CHANNELS; ch++) {
      const rowStart = (t * DEAP_CHANNELS + ch) * DEAP_SAMPLES + BASELINE_SAMPLES;
      for (let s = 0; s < keptSamples; s++) {
        payload.writeFloatLE(data.data[rowStart + s], off);
        off += 4;
      }
    }
    trials.push({
      subjectId,
      trialId: t,
      channels: EEG_CHANNELS,
      sampleRateHz: SAMPLE_RATE_HZ,
      nSamples: keptSamples,
      valence: labels.data[t * 4],
      arousal: labels.data[t * 4 + 1],
      payload,
    });
  }
  return trials;
}

/**
 * Convert one subject file and write the container. The output buffer is
 * assembled fully in memory before the file is created, so a failing
 * conversion leaves no partial output behind.
 */
export function convert(inPath: string, outPath: string, subjectId: number): number {
  const subject = loadSubject(inPath);
  const container = encodeContainer(subjectToTrials(subject, subjectId));
  fs.writeFileSync(outPath, container);
  return DEAP_TRIALS;
}
