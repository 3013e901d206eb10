/** Builders for DEAP-shaped NPY/NPZ fixtures used by the converter tests. */

import { deflateRawSync } from 'node:zlib';

export function buildNpy(data: Float64Array | Float32Array, shape: number[]): Buffer {
  const descr = data instanceof Float64Array ? '<f8' : '<f4';
  const shapeText = shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(', ')})`;
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const unpadded = 10 + header.length + 1;
  header += ' '.repeat((64 - (unpadded % 64)) % 64) + '\n';
  const head = Buffer.alloc(10 + header.length);
  head.write('\x93NUMPY', 0, 'latin1');
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  head.write(header, 10, 'latin1');
  return Buffer.concat([head, Buffer.from(data.buffer, data.byteOffset, data.byteLength)]);
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(buf: Buffer): number {
  let crc = 0xffffffff;
  for (const byte of buf) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

interface ZipMember {
  name: string;
  data: Buffer;
}

/** Minimal ZIP writer: stored or deflated members, classic headers. */
export function buildZip(members: ZipMember[], method: 0 | 8 = 0): Buffer {
  const locals: Buffer[] = [];
  const centrals: Buffer[] = [];
  let offset = 0;
  for (const member of members) {
    const nameBuf = Buffer.from(member.name, 'utf-8');
    const crc = crc32(member.data);
    const packed = method === 8 ? deflateRawSync(member.data) : member.data;

    const local = Buffer.alloc(30 + nameBuf.length + packed.length);
    local.writeUInt32LE(0x04034b50, 0);
    local.writeUInt16LE(20, 4); // version needed
    local.writeUInt16LE(0, 6); // flags
    local.writeUInt16LE(method, 8);
    local.writeUInt32LE(0, 10); // dos time/date
    local.writeUInt32LE(crc, 14);
    local.writeUInt32LE(packed.length, 18);
    local.writeUInt32LE(member.data.length, 22);
    local.writeUInt16LE(nameBuf.length, 26);
    local.writeUInt16LE(0, 28);
    nameBuf.copy(local, 30);
    packed.copy(local, 30 + nameBuf.length);
    locals.push(local);

    const central = Buffer.alloc(46 + nameBuf.length);
    central.writeUInt32LE(0x02014b50, 0);
    central.writeUInt16LE(20, 4);
    central.writeUInt16LE(20, 6);
    central.writeUInt16LE(0, 8);
    central.writeUInt16LE(method, 10);
    central.writeUInt32LE(0, 12);
    central.writeUInt32LE(crc, 16);
    central.writeUInt32LE(packed.length, 20);
    central.writeUInt32LE(member.data.length, 24);
    central.writeUInt16LE(nameBuf.length, 28);
    central.writeUInt16LE(0, 30); // extra
    central.writeUInt16LE(0, 32); // comment
    central.writeUInt16LE(0, 34); // disk
    central.writeUInt16LE(0, 36); // internal attrs
    central.writeUInt32LE(0, 38); // external attrs
    central.writeUInt32LE(offset, 42);
    nameBuf.copy(central, 46);
    centrals.push(central);

    offset += local.length;
  }
  const centralStart = offset;
  const centralSize = centrals.reduce((a, b) => a + b.length, 0);
  const eocd = Buffer.alloc(22);
  eocd.writeUInt32LE(0x06054b50, 0);
  eocd.writeUInt16LE(members.length, 8);
  eocd.writeUInt16LE(members.length, 10);
  eocd.writeUInt32LE(centralSize, 12);
  eocd.writeUInt32LE(centralStart, 16);
  return Buffer.concat([...locals, ...centrals, eocd]);
}

export interface DeapFixture {
  npz: Buffer;
  data: Float64Array; // 40 x 40 x 8064
  labels: Float64Array; // 40 x 4
}

/** Deterministic DEAP-shaped subject arrays (~25 MB of float64 signal). */
export function buildDeapFixture(seed = 1234, method: 0 | 8 = 0): DeapFixture {
  const trials = 40;
  const channels = 40;
  const samples = 8064;
  const data = new Float64Array(trials * channels * samples);
  // xorshift-style generator keeps the fixture reproducible without deps
  let state = BigInt(seed) & 0xffffffffffffffffn;
  const next = () => {
    state ^= (state << 13n) & 0xffffffffffffffffn;
    state ^= state >> 7n;
    state ^= (state << 17n) & 0xffffffffffffffffn;
    return Number(state % 1000000n) / 1000000 - 0.5;
  };
  for (let i = 0; i < data.length; i++) {
    data[i] = 40.0 * next();
  }
  const labels = new Float64Array(trials * 4);
  for (let t = 0; t < trials; t++) {
    labels[t * 4] = 1.0 + (t % 9); // valence sweeps the full 1..9 range
    labels[t * 4 + 1] = 9.0 - (t % 9);
    labels[t * 4 + 2] = 5.0;
    labels[t * 4 + 3] = 5.0;
  }
  const npz = buildZip(
    [
      { name: 'data.npy', data: buildNpy(data, [trials, channels, samples]) },
      { name: 'labels.npy', data: buildNpy(labels, [trials, 4]) },
    ],
    method,
  );
  return { npz, data, labels };
}
