/**
 * Protocol v1 request loop over line-delimited JSON.
 *
 * Field order and number rendering follow the canonical serialization
 * rules in PROTOCOL.md; JSON.stringify already emits ECMAScript number
 * formatting, so building reply objects in the documented field order
 * is all that is needed for byte-stable output.
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";
import { WorkerBackend } from "./backend.js";
import { round12 } from "./rng.js";

export const PROTOCOL_VERSION = 1;
export const SUPPORTED_KINDS = ["generate", "mutate", "evaluate", "similarity"];

interface Envelope {
  id: number;
  kind: string;
  body: Record<string, unknown>;
}

function parseSeed(raw: unknown): bigint {
  if (typeof raw !== "string" || !/^[0-9]+$/.test(raw)) {
    throw new Error(`seed must be a decimal string, got ${JSON.stringify(raw)}`);
  }
  const seed = BigInt(raw);
  if (seed >= 1n << 64n) throw new Error("seed exceeds 64 bits");
  return seed;
}

async function dispatch(
  backend: WorkerBackend,
  kind: string,
  body: Record<string, unknown>,
): Promise<Record<string, unknown>> {
  switch (kind) {
    case "handshake": {
      if (Number(body.protocol_version) !== PROTOCOL_VERSION) {
        throw new Error(
          `unsupported protocol version ${JSON.stringify(body.protocol_version)}`,
        );
      }
      return {
        protocol_version: PROTOCOL_VERSION,
        max_concurrency: backend.maxConcurrency,
        supports: SUPPORTED_KINDS,
      };
    }
    case "generate": {
      const result = await backend.generate(String(body.prompt), parseSeed(body.seed));
      return {
        genotype: result.genotype.toString("base64"),
        phenotype: { id: result.phenotypeId },
      };
    }
    case "mutate": {
      const parent = Buffer.from(String(body.genotype), "base64");
      const result = await backend.mutate(
        String(body.prompt),
        parent,
        parseSeed(body.seed),
        Number(body.strength),
      );
      return {
        genotype: result.genotype.toString("base64"),
        phenotype: { id: result.phenotypeId },
      };
    }
    case "evaluate": {
      const labels = (body.labels as string[]).map(String);
      const values = await backend.classify(String(body.phenotype), labels);
      return { values: values.map(round12) };
    }
    case "similarity": {
      const cosine = await backend.similarity(String(body.phenotype), String(body.prompt));
      return { cosine: round12(cosine) };
    }
    default:
      throw new Error(`unknown request kind '${kind}'`);
  }
}

function writeLine(output: Writable, envelope: Envelope): void {
  output.write(JSON.stringify(envelope) + "\n");
}

/**
 * Serve requests until a shutdown message or end of input.
 * Resolves to the process exit code.
 */
export async function serve(
  backend: WorkerBackend,
  input: Readable,
  output: Writable,
): Promise<number> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const raw of lines) {
    const line = raw.trim();
    if (line === "") continue;
    let msg: Envelope;
    try {
      const parsed = JSON.parse(line);
      if (typeof parsed.id !== "number" || typeof parsed.kind !== "string") {
        throw new Error("missing id or kind");
      }
      msg = { id: parsed.id, kind: parsed.kind, body: parsed.body ?? {} };
    } catch {
      console.error(`adapter: unparseable request line: ${line.slice(0, 200)}`);
      return 1;
    }
    if (msg.kind === "shutdown") {
      writeLine(output, { id: msg.id, kind: "reply", body: {} });
      return 0;
    }
    try {
      const body = await dispatch(backend, msg.kind, msg.body);
      writeLine(output, { id: msg.id, kind: "reply", body });
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      writeLine(output, { id: msg.id, kind: "error", body: { message } });
    }
  }
  return 0;
}
