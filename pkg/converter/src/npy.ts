/**
 * Minimal reader for NumPy's NPY serialization and NPZ archives.
 *
 * Supports little-endian float32/float64 payloads in C order, NPY format
 * versions 1.x and 2.x, and NPZ members stored either uncompressed or
 * deflated. That covers the DEAP preprocessed arrays this tool consumes.
 */

import { inflateRawSync } from 'node:zlib';

export interface NpyArray {
  data: Float32Array | Float64Array;
  shape: number[];
}

const NPY_MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export class FormatError extends Error {}

export function parseNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(NPY_MAGIC)) {
    throw new FormatError('not an NPY file (bad magic)');
  }
  const major = buf[6];
  let headerLen: number;
  let dataStart: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    dataStart = 10 + headerLen;
  } else if (major === 2 || major === 3) {
    headerLen = buf.readUInt32LE(8);
    dataStart = 12 + headerLen;
  } else {
    throw new FormatError(`unsupported NPY version ${major}`);
  }
  if (dataStart > buf.length) {
    throw new FormatError('NPY header extends past end of file');
  }
  const header = buf.subarray(major === 1 ? 10 : 12, dataStart).toString('latin1');

  const descr = /'descr'\s*:\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order'\s*:\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape'\s*:\s*\(([^)]*)\)/.exec(header)?.[1];
  if (!descr || !fortran || shapeText === undefined) {
    throw new FormatError(`unparseable NPY header: ${header.trim()}`);
  }
  if (fortran === 'True') {
    throw new FormatError('fortran-ordered NPY arrays are not supported');
  }
  const shape = shapeText
    .split(',')
    .map((tok) => tok.trim())
    .filter((tok) => tok.length > 0)
    .map((tok) => Number.parseInt(tok, 10));
  const count = shape.reduce((a, b) => a * b, 1);

  const body = buf.subarray(dataStart);
  if (descr === '<f8') {
    if (body.length < count * 8) throw new FormatError('NPY float64 payload truncated');
    return { data: new Float64Array(body.buffer, body.byteOffset, count).slice(), shape };
  }
  if (descr === '<f4') {
    if (body.length < count * 4) throw new FormatError('NPY float32 payload truncated');
    return { data: new Float32Array(body.buffer, body.byteOffset, count).slice(), shape };
  }
  throw new FormatError(`unsupported NPY dtype ${descr} (need <f4 or <f8)`);
}

/** Parse an NPZ archive (a ZIP of .npy members) into named arrays. */
export function parseNpz(buf: Buffer): Record<string, NpyArray> {
  const eocd = findEndOfCentralDirectory(buf);
  const out: Record<string, NpyArray> = {};
  let offset = eocd.centralDirOffset;
  for (let i = 0; i < eocd.entryCount; i++) {
    if (buf.readUInt32LE(offset) !== 0x02014b50) {
      throw new FormatError(`bad central directory entry at ${offset}`);
    }
    const method = buf.readUInt16LE(offset + 10);
    const compressedSize = buf.readUInt32LE(offset + 20);
    const nameLen = buf.readUInt16LE(offset + 28);
    const extraLen = buf.readUInt16LE(offset + 30);
    const commentLen = buf.readUInt16LE(offset + 32);
    const localOffset = buf.readUInt32LE(offset + 42);
    const name = buf.subarray(offset + 46, offset + 46 + nameLen).toString('utf-8');

    if (buf.readUInt32LE(localOffset) !== 0x04034b50) {
      throw new FormatError(`bad local header for ${name}`);
    }
    const localNameLen = buf.readUInt16LE(localOffset + 26);
    const localExtraLen = buf.readUInt16LE(localOffset + 28);
    const dataStart = localOffset + 30 + localNameLen + localExtraLen;
    if (dataStart + compressedSize > buf.length) {
      throw new FormatError(`member ${name} truncated`);
    }
    const raw = buf.subarray(dataStart, dataStart + compressedSize);
    let payload: Buffer;
    if (method === 0) {
      payload = Buffer.from(raw);
    } else if (method === 8) {
      payload = inflateRawSync(raw);
    } else {
      throw new FormatError(`unsupported compression method ${method} for ${name}`);
    }
    out[name.replace(/\.npy$/i, '')] = parseNpy(payload);
    offset += 46 + nameLen + extraLen + commentLen;
  }
  return out;
}

function findEndOfCentralDirectory(buf: Buffer): { centralDirOffset: number; entryCount: number } {
  const min = Math.max(0, buf.length - 65557);
  for (let pos = buf.length - 22; pos >= min; pos--) {
    if (buf.readUInt32LE(pos) === 0x06054b50) {
      return {
        entryCount: buf.readUInt16LE(pos + 10),
        centralDirOffset: buf.readUInt32LE(pos + 16),
      };
    }
  }
  throw new FormatError('not a ZIP archive (no end-of-central-directory record)');
}
