#!/usr/bin/env node
/**
 * convert <in.npz | dir> <out.eegc> --subject N
 *
 * Exit codes mirror the pipeline CLI: 0 success, 2 unreadable or malformed
 * input, 3 bad usage, 4 conversion failure.
 */

import { convert, InputShapeError } from './convert.js';
import { FormatError } from './npy.js';

function usage(): string {
  return 'usage: deap-eegc-convert convert <in.npz|dir> <out.eegc> --subject N';
}

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] !== 'convert') {
    console.error(usage());
    return 3;
  }
  args.shift();
  let subject: number | undefined;
  const positional: string[] = [];
  while (args.length > 0) {
    const tok = args.shift()!;
    if (tok === '--subject') {
      const value = args.shift();
      subject = value === undefined ? NaN : Number.parseInt(value, 10);
    } else if (tok.startsWith('--')) {
      console.error(`unknown flag ${tok}\n${usage()}`);
      return 3;
    } else {
      positional.push(tok);
    }
  }
  if (positional.length !== 2 || subject === undefined || Number.isNaN(subject) || subject < 0) {
    console.error(usage());
    return 3;
  }
  const [inPath, outPath] = positional;
  try {
    const n = convert(inPath, outPath, subject);
    console.log(`wrote ${n} trials for subject ${subject} to ${outPath}`);
    return 0;
  } catch (err) {
    if (err instanceof FormatError || err instanceof InputShapeError) {
      console.error(`malformed input: ${(err as Error).message}`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code === 'ENOENT') {
      console.error(`cannot read input: ${(err as Error).message}`);
      return 2;
    }
    console.error(`conversion failed: ${(err as Error).message}`);
    return 4;
  }
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
  process.exit(main(process.argv.slice(2)));
}
