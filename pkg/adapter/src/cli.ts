#!/usr/bin/env node
/**
 * Worker entry point: serve protocol v1 over standard streams.
 *
 * Usage:
 *   promptevo-adapter [--backend mock|diffusion]
 *                     [--spec FILE | --spec-json JSON]      (mock)
 *                     [--model-config FILE]                 (diffusion)
 */

import { readFileSync } from "node:fs";
import process from "node:process";
import { WorkerBackend, mockBackend } from "./backend.js";
import { diffusionBackend, loadDiffusionConfig } from "./diffusion.js";
import { serve } from "./server.js";
import { specFromConfig } from "./testbed.js";

interface Args {
  backend: string;
  spec?: string;
  specJson?: string;
  modelConfig?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { backend: "mock" };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[i];
    };
    switch (flag) {
      case "--backend":
        args.backend = next();
        break;
      case "--spec":
        args.spec = next();
        break;
      case "--spec-json":
        args.specJson = next();
        break;
      case "--model-config":
        args.modelConfig = next();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function buildBackend(args: Args): WorkerBackend {
  if (args.backend === "mock") {
    let raw: unknown = {};
    if (args.spec !== undefined) raw = JSON.parse(readFileSync(args.spec, "utf-8"));
    else if (args.specJson !== undefined) raw = JSON.parse(args.specJson);
    return mockBackend(specFromConfig(raw));
  }
  if (args.backend === "diffusion") {
    if (args.modelConfig === undefined) {
      throw new Error("diffusion backend requires --model-config FILE");
    }
    return diffusionBackend(loadDiffusionConfig(args.modelConfig));
  }
  throw new Error(`unknown backend '${args.backend}' (expected mock or diffusion)`);
}

async function main(): Promise<number> {
  let backend: WorkerBackend;
  try {
    backend = buildBackend(parseArgs(process.argv.slice(2)));
  } catch (err) {
    console.error(`adapter: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  return serve(backend, process.stdin, process.stdout);
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`adapter: fatal: ${err instanceof Error ? err.stack : err}`);
    process.exit(1);
  },
);
