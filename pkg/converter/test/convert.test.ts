import assert from 'node:assert/strict';
import { createHash } from 'node:crypto';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { spawnSync } from 'node:child_process';
import { test } from 'node:test';

import { decodeContainer } from '../src/eegc.js';
import { BASELINE_SAMPLES, DEAP_SAMPLES, convert, loadSubject } from '../src/convert.js';
import { main } from '../src/cli.js';
import { parseNpy, parseNpz } from '../src/npy.js';
import { buildDeapFixture, buildNpy, buildZip } from './fixtures.js';

function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'deap-convert-'));
}

test('npy round trip for float64 and float32', () => {
  const f64 = new Float64Array([1.5, -2.25, 3.125, 0.0, 4.75, -8.5]);
  const parsed = parseNpy(buildNpy(f64, [2, 3]));
  assert.deepEqual(parsed.shape, [2, 3]);
  assert.deepEqual(Array.from(parsed.data), Array.from(f64));

  const f32 = new Float32Array([0.5, -1.5, 2.5]);
  const parsed32 = parseNpy(buildNpy(f32, [3]));
  assert.deepEqual(parsed32.shape, [3]);
  assert.deepEqual(Array.from(parsed32.data), Array.from(f32));
});

test('npz parsing handles stored and deflated members', () => {
  const arr = new Float64Array([1, 2, 3, 4]);
  for (const method of [0, 8] as const) {
    const zip = buildZip([{ name: 'data.npy', data: buildNpy(arr, [4]) }], method);
    const parsed = parseNpz(zip);
    assert.deepEqual(Array.from(parsed.data.data), [1, 2, 3, 4]);
  }
});

test('npy rejects garbage and fortran order', () => {
  assert.throws(() => parseNpy(Buffer.from('not numpy at all')));
  const arr = new Float64Array([1]);
  const npy = buildNpy(arr, [1]);
  const mangled = Buffer.from(
    npy.toString('latin1').replace("'fortran_order': False", "'fortran_order': True "),
    'latin1',
  );
  assert.throws(() => parseNpy(mangled));
});

const fixture = buildDeapFixture();

test('converted container has 40 trials of 32 x 7680 at 128 Hz', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 'subject01.npz');
  const outPath = path.join(dir, 'subject01.eegc');
  fs.writeFileSync(inPath, fixture.npz);

  assert.equal(convert(inPath, outPath, 1), 40);
  const trials = decodeContainer(fs.readFileSync(outPath));
  assert.equal(trials.length, 40);
  for (const t of trials) {
    assert.equal(t.channels, 32);
    assert.equal(t.nSamples, 7680);
    assert.equal(t.sampleRateHz, 128);
    assert.equal(t.subjectId, 1);
  }
  assert.equal(trials[3].valence, fixture.labels[3 * 4]);
  assert.equal(trials[3].arousal, fixture.labels[3 * 4 + 1]);
});

test('payload bytes match the source after float32 down-conversion', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 's.npz');
  const outPath = path.join(dir, 's.eegc');
  fs.writeFileSync(inPath, fixture.npz);
  convert(inPath, outPath, 1);
  const trials = decodeContainer(fs.readFileSync(outPath));

  for (const trialIdx of [0, 17, 39]) {
    const expected = Buffer.alloc(32 * 7680 * 4);
    let off = 0;
    for (let ch = 0; ch < 32; ch++) {
      const start = (trialIdx * 40 + ch) * DEAP_SAMPLES + BASELINE_SAMPLES;
      for (let s = 0; s < 7680; s++) {
        expected.writeFloatLE(fixture.data[start + s], off);
        off += 4;
      }
    }
    assert.ok(expected.equals(trials[trialIdx].payload), `trial ${trialIdx} payload mismatch`);
  }
});

test('channel order is preserved and peripherals are dropped', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 's.npz');
  fs.writeFileSync(inPath, fixture.npz);
  const subject = loadSubject(inPath);
  const outPath = path.join(dir, 's.eegc');
  convert(inPath, outPath, 2);
  const trials = decodeContainer(fs.readFileSync(outPath));
  // channel 31 must be DEAP channel 31, not a peripheral (32..39)
  const t0 = trials[0];
  const ch31 = t0.payload.readFloatLE(31 * 7680 * 4);
  const srcIdx = (0 * 40 + 31) * DEAP_SAMPLES + BASELINE_SAMPLES;
  assert.equal(ch31, Math.fround(subject.data.data[srcIdx]));
});

test('truncated input raises and leaves no partial output', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 'broken.npz');
  const outPath = path.join(dir, 'broken.eegc');
  fs.writeFileSync(inPath, fixture.npz.subarray(0, 4096));
  assert.throws(() => convert(inPath, outPath, 1));
  assert.ok(!fs.existsSync(outPath), 'partial output file must not exist');
});

test('wrong array shape is rejected', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 'bad.npz');
  const bad = buildZip([
    { name: 'data.npy', data: buildNpy(new Float64Array(2 * 3 * 4), [2, 3, 4]) },
    { name: 'labels.npy', data: buildNpy(new Float64Array(8), [2, 4]) },
  ]);
  fs.writeFileSync(inPath, bad);
  assert.throws(() => convert(inPath, path.join(dir, 'out.eegc'), 1), /40 x 40 x 8064/);
});

test('cli exit codes', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 's.npz');
  fs.writeFileSync(inPath, fixture.npz);
  const outPath = path.join(dir, 'cli.eegc');
  assert.equal(main(['convert', inPath, outPath, '--subject', '3']), 0);
  assert.equal(main(['convert', inPath, outPath]), 3); // missing --subject
  assert.equal(main(['nonsense']), 3);
  assert.equal(main(['convert', path.join(dir, 'missing.npz'), outPath, '--subject', '1']), 2);
  const garbled = path.join(dir, 'garbled.npz');
  fs.writeFileSync(garbled, Buffer.from('definitely not a zip'));
  assert.equal(main(['convert', garbled, outPath, '--subject', '1']), 2);
});

test('primary pipeline reader parses the converted container', () => {
  const dir = tmpdir();
  const inPath = path.join(dir, 's.npz');
  const outPath = path.join(dir, 's.eegc');
  fs.writeFileSync(inPath, fixture.npz);
  convert(inPath, outPath, 1);

  const repoRoot = path.resolve(import.meta.dirname, '..', '..', '..');
  const pythonPath =
    [process.env.PYTHONPATH, path.join(repoRoot, 'src')].filter(Boolean).join(path.delimiter);
  const proc = spawnSync(
    'python3',
    ['-m', 'eegfusion.cli', 'convert-info', '--container', outPath, '--json'],
    {
      env: { ...process.env, PYTHONPATH: pythonPath },
      encoding: 'utf-8',
    },
  );
  assert.equal(proc.status, 0, `convert-info failed: ${proc.stderr}`);
  const info = JSON.parse(proc.stdout);
  assert.equal(info.n_trials, 40);

  const trials = decodeContainer(fs.readFileSync(outPath));
  for (let i = 0; i < 40; i++) {
    assert.equal(info.trials[i].n_samples, 7680);
    assert.equal(info.trials[i].channels, 32);
    const sha = createHash('sha256').update(trials[i].payload).digest('hex');
    assert.equal(info.trials[i].payload_sha256, sha, `trial ${i} checksum mismatch`);
  }
});
