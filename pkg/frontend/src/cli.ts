#!/usr/bin/env node
/** CLI: `mvekit-plots render --spec fig.json` or flags mirroring FigureSpec. */

import { readFileSync } from "fs";

import { render } from "./render.js";
import { FigureSpec } from "./spec.js";

function usage(): string {
  return [
    "usage: mvekit-plots render (--spec SPEC.json | --glob G --kind K --out PATH)",
    "                           [--smoothing N] [--title T]",
    "kinds: learning-curve | uncertainty-band | rollout-length | correlation",
  ].join("\n");
}

function parseArgs(argv: string[]): Partial<FigureSpec> {
  const spec: Partial<FigureSpec> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i++;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case "--spec":
        Object.assign(spec, JSON.parse(readFileSync(next(), "utf8")));
        break;
      case "--glob":
        spec.glob = next();
        break;
      case "--kind":
        spec.kind = next() as FigureSpec["kind"];
        break;
      case "--out":
        spec.out = next();
        break;
      case "--smoothing":
        spec.smoothing = Number(next());
        break;
      case "--title":
        spec.title = next();
        break;
      default:
        throw new Error(`unknown flag ${arg}`);
    }
  }
  return spec;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    console.error(usage());
    return 2;
  }
  try {
    const out = render(parseArgs(argv.slice(1)));
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
