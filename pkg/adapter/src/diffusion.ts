/**
 * Model-backed backend: talks to a locally running image stack over HTTP.
 *
 * Expects an A1111-style txt2img/img2img API plus score and embedding
 * endpoints; all addresses come from a JSON config file.  This mode is
 * best-effort: GPU kernels are not bit-deterministic, so it is exempt
 * from the cross-implementation agreement the mock backend guarantees.
 */

import { readFileSync } from "node:fs";
import { createHash } from "node:crypto";
import { GenerateResult, WorkerBackend } from "./backend.js";

export interface DiffusionConfig {
  txt2imgUrl: string;
  img2imgUrl: string;
  scoreUrl: string;
  similarityUrl: string;
  steps?: number;
  guidance?: number;
}

export function loadDiffusionConfig(path: string): DiffusionConfig {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  for (const key of ["txt2imgUrl", "img2imgUrl", "scoreUrl", "similarityUrl"]) {
    if (typeof raw[key] !== "string") {
      throw new Error(`diffusion config missing '${key}'`);
    }
  }
  return raw as DiffusionConfig;
}

async function postJson(url: string, payload: unknown): Promise<any> {
  const res = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  if (!res.ok) {
    throw new Error(`diffusion endpoint ${url} returned ${res.status}`);
  }
  return res.json();
}

export function diffusionBackend(config: DiffusionConfig): WorkerBackend {
  // phenotype id -> base64 image, kept worker-side like the mock latents
  const images = new Map<string, string>();

  function mint(genotype: Buffer, imageB64: string): GenerateResult {
    const id = "sd-" + createHash("sha256").update(imageB64).digest("hex").slice(0, 16);
    images.set(id, imageB64);
    return { genotype, phenotypeId: id };
  }

  function image(id: string): string {
    const img = images.get(id);
    if (img === undefined) throw new Error(`unknown phenotype id '${id}'`);
    return img;
  }

  return {
    maxConcurrency: 1,
    async generate(prompt, seed) {
      const res = await postJson(config.txt2imgUrl, {
        prompt,
        seed: seed.toString(),
        steps: config.steps ?? 30,
        cfg_scale: config.guidance ?? 7.5,
      });
      const imageB64: string = res.images[0];
      return mint(Buffer.from(imageB64, "base64"), imageB64);
    },
    async mutate(prompt, parent, seed, strength) {
      const res = await postJson(config.img2imgUrl, {
        prompt,
        seed: seed.toString(),
        init_images: [parent.toString("base64")],
        denoising_strength: strength,
        steps: config.steps ?? 30,
        cfg_scale: config.guidance ?? 7.5,
      });
      const imageB64: string = res.images[0];
      return mint(Buffer.from(imageB64, "base64"), imageB64);
    },
    async classify(phenotype, labels) {
      const res = await postJson(config.scoreUrl, { image: image(phenotype), labels });
      return (res.values as number[]).map(Number);
    },
    async similarity(phenotype, prompt) {
      const res = await postJson(config.similarityUrl, { image: image(phenotype), prompt });
      return Number(res.cosine);
    },
  };
}
