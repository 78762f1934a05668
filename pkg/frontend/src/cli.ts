#!/usr/bin/env node
/**
 * render <figure-id> --in <run-dir> --out <file.svg>
 *
 * Writes the SVG plus a JSON sidecar (<file>.json) with any re-derived fit
 * parameters.  Exits nonzero on unknown figures or schema mismatches.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { FIGURES, figureById } from "./figures.js";

function usage(): string {
  const list = FIGURES.map((f) => `  ${f.id.padEnd(24)} ${f.description}`).join("\n");
  return `usage: scarkit-render <figure-id> --in <run-dir> --out <file.svg>\n\nfigures:\n${list}\n`;
}

export function main(argv: string[]): number {
  const args = argv.slice();
  if (args[0] === "render") args.shift();
  if (!args.length || args[0] === "--help" || args[0] === "-h") {
    process.stdout.write(usage());
    return args.length ? 0 : 2;
  }
  const id = args.shift()!;
  let inDir = "";
  let outFile = "";
  while (args.length) {
    const flag = args.shift()!;
    if (flag === "--in") inDir = args.shift() ?? "";
    else if (flag === "--out") outFile = args.shift() ?? "";
    else {
      process.stderr.write(`unknown flag ${flag}\n${usage()}`);
      return 2;
    }
  }
  if (!inDir || !outFile) {
    process.stderr.write(usage());
    return 2;
  }
  try {
    const spec = figureById(id);
    const { svg, sidecar } = spec.render(inDir);
    mkdirSync(dirname(outFile), { recursive: true });
    writeFileSync(outFile, svg);
    const sidecarPath = outFile.replace(/\.svg$/, "") + ".json";
    writeFileSync(
      sidecarPath,
      JSON.stringify({ figure: id, ...sidecar }, null, 2) + "\n",
    );
    process.stdout.write(`${outFile}\n${sidecarPath}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`render failed: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
