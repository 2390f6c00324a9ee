/**
 * Backend slot behind the protocol server.
 *
 * A backend fills the role of the real generator + classifier +
 * embedding stack; the server only cares about this interface.  Seeds
 * arrive as BigInt because 64-bit values do not fit a JS number.
 */

import {
  TestbedSpec,
  classify,
  generatePayload,
  latentOf,
  mutatePayload,
  phenotypeId,
  similarity,
} from "./testbed.js";

export interface GenerateResult {
  genotype: Buffer;
  phenotypeId: string;
}

export interface WorkerBackend {
  /** Concurrency this backend can actually sustain. */
  readonly maxConcurrency: number;
  generate(prompt: string, seed: bigint): Promise<GenerateResult>;
  mutate(
    prompt: string,
    parent: Buffer,
    seed: bigint,
    strength: number,
  ): Promise<GenerateResult>;
  classify(phenotype: string, labels: string[]): Promise<number[]>;
  similarity(phenotype: string, prompt: string): Promise<number>;
}

/** Synthetic backend that mirrors the engine's builtin testbed exactly. */
export function mockBackend(spec: TestbedSpec): WorkerBackend {
  const latents = new Map<string, number[]>();

  function mint(payload: Buffer): GenerateResult {
    const id = phenotypeId(payload);
    latents.set(id, latentOf(spec, payload));
    return { genotype: payload, phenotypeId: id };
  }

  function latent(id: string): number[] {
    const z = latents.get(id);
    if (z === undefined) throw new Error(`unknown phenotype id '${id}'`);
    return z;
  }

  return {
    maxConcurrency: 8,
    async generate(_prompt, seed) {
      return mint(generatePayload(seed));
    },
    async mutate(_prompt, parent, seed, strength) {
      return mint(mutatePayload(parent, seed, strength));
    },
    async classify(phenotype, labels) {
      if (labels.length !== spec.centers.length) {
        throw new Error(
          `testbed scores ${spec.centers.length} labels, got ${labels.length}`,
        );
      }
      return classify(spec, latent(phenotype));
    },
    async similarity(phenotype, _prompt) {
      return similarity(spec, latent(phenotype));
    },
  };
}
