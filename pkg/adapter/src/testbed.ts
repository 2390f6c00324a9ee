/**
 * Mock backend math: the synthetic testbed from PROTOCOL.md.
 *
 * Genotype payloads encode a seed lineage (initial u64 seed, then one
 * little-endian (f64 strength, u64 seed) record per mutation) and the
 * latent vector is replayed from that chain.  Scores are Gaussian bumps
 * around the spec centers plus a cosine against the prompt anchor, both
 * rounded to 12 significant digits before they ever leave the process.
 */

import { createHash } from "node:crypto";
import { normalsAt, round12 } from "./rng.js";

export interface TestbedSpec {
  dim: number;
  centers: number[][];
  sigma: number;
  promptAnchor: number[];
}

function norm(v: number[]): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

function defaultAnchor(centers: number[][]): number[] {
  const dim = centers[0].length;
  const sum = new Array<number>(dim).fill(0);
  for (const c of centers) for (let i = 0; i < dim; i++) sum[i] += c[i];
  const base = norm(sum) < 1e-9 ? centers[0].slice() : sum;
  const n = norm(base);
  return base.map((x) => x / n);
}

export function defaultSpec(q = 2, dim = 2): TestbedSpec {
  if (dim < 2) throw new Error("default spec needs dim >= 2");
  let centers: number[][];
  if (q === 2) {
    centers = [
      [1, ...new Array<number>(dim - 1).fill(0)],
      [-1, ...new Array<number>(dim - 1).fill(0)],
    ];
  } else {
    centers = [];
    for (let k = 0; k < q; k++) {
      const a = Math.PI / 2 + (2 * Math.PI * k) / q;
      const c = [round12(Math.cos(a)), round12(Math.sin(a))];
      centers.push([...c, ...new Array<number>(dim - 2).fill(0)]);
    }
  }
  return { dim, centers, sigma: 1, promptAnchor: defaultAnchor(centers) };
}

/** Accepts the same shorthand as the engine's testbed config block. */
export function specFromConfig(raw: unknown): TestbedSpec {
  const cfg = (raw ?? {}) as Record<string, unknown>;
  const q = cfg.q === undefined ? 2 : Number(cfg.q);
  const dim = cfg.dim === undefined ? 2 : Number(cfg.dim);
  const base = defaultSpec(q, dim);
  const centers = Array.isArray(cfg.centers)
    ? (cfg.centers as number[][]).map((c) => c.map(Number))
    : base.centers;
  const sigma = cfg.sigma === undefined ? base.sigma : Number(cfg.sigma);
  if (!(sigma > 0)) throw new Error("sigma must be > 0");
  let anchor: number[];
  if (Array.isArray(cfg.prompt_anchor)) {
    const a = (cfg.prompt_anchor as number[]).map(Number);
    const n = norm(a);
    if (n === 0) throw new Error("prompt_anchor must be non-zero");
    anchor = a.map((x) => x / n);
  } else {
    anchor = defaultAnchor(centers);
  }
  const known = new Set(["q", "dim", "centers", "sigma", "prompt_anchor"]);
  const unknown = Object.keys(cfg).filter((k) => !known.has(k));
  if (unknown.length > 0) {
    throw new Error(`unknown testbed keys: ${unknown.sort().join(", ")}`);
  }
  return { dim, centers, sigma, promptAnchor: anchor };
}

// -- genotype payload ---------------------------------------------------

const HEAD_BYTES = 8;
const STEP_BYTES = 16;

export function generatePayload(seed: bigint): Buffer {
  const buf = Buffer.alloc(HEAD_BYTES);
  buf.writeBigUInt64LE(seed, 0);
  return buf;
}

export function mutatePayload(parent: Buffer, seed: bigint, strength: number): Buffer {
  if (!(strength >= 0 && strength <= 1)) {
    throw new Error("strength must be in [0, 1]");
  }
  if (strength === 0) return Buffer.from(parent); // clone: lineage unchanged
  const step = Buffer.alloc(STEP_BYTES);
  step.writeDoubleLE(strength, 0);
  step.writeBigUInt64LE(seed, 8);
  return Buffer.concat([parent, step]);
}

export function latentOf(spec: TestbedSpec, payload: Buffer): number[] {
  if (payload.length < HEAD_BYTES || (payload.length - HEAD_BYTES) % STEP_BYTES !== 0) {
    throw new Error("malformed testbed genotype payload");
  }
  const seed0 = payload.readBigUInt64LE(0);
  let z = normalsAt(seed0, spec.dim);
  for (let off = HEAD_BYTES; off < payload.length; off += STEP_BYTES) {
    const strength = payload.readDoubleLE(off);
    const seed = payload.readBigUInt64LE(off + 8);
    const eps = normalsAt(seed, spec.dim);
    const keep = Math.sqrt(1 - strength * strength);
    z = z.map((v, i) => keep * v + strength * eps[i]);
  }
  return z;
}

export function phenotypeId(payload: Buffer): string {
  return "tb-" + createHash("sha256").update(payload).digest("hex").slice(0, 16);
}

// -- scoring ------------------------------------------------------------

export function classify(spec: TestbedSpec, z: number[]): number[] {
  return spec.centers.map((c) => {
    let d2 = 0;
    for (let i = 0; i < spec.dim; i++) {
      const d = z[i] - c[i];
      d2 += d * d;
    }
    return round12(Math.exp(-d2 / (2 * spec.sigma * spec.sigma)));
  });
}

export function similarity(spec: TestbedSpec, z: number[]): number {
  const nz = norm(z);
  if (nz === 0) return 0;
  let dot = 0;
  for (let i = 0; i < spec.dim; i++) dot += z[i] * spec.promptAnchor[i];
  const cos = dot / nz;
  return round12(Math.max(-1, Math.min(1, cos)));
}
