/**
 * Mock backend math against fixtures recorded from the reference engine
 * (same spec: Q=2, dim=2, centers at +/- e1, sigma 1, anchor e1).
 */

import { describe, expect, it } from "vitest";
import { mockBackend } from "../src/backend.js";
import {
  classify,
  defaultSpec,
  generatePayload,
  latentOf,
  mutatePayload,
  phenotypeId,
  similarity,
  specFromConfig,
} from "../src/testbed.js";

const SPEC = defaultSpec();

describe("spec handling", () => {
  it("default anchor is e1 for the two-bump layout", () => {
    expect(SPEC.centers).toEqual([[1, 0], [-1, 0]]);
    expect(SPEC.promptAnchor).toEqual([1, 0]);
  });

  it("config shorthand and anchor normalization", () => {
    const spec = specFromConfig({ q: 2, dim: 2, prompt_anchor: [3, 4] });
    expect(spec.promptAnchor[0]).toBeCloseTo(0.6, 12);
    expect(spec.promptAnchor[1]).toBeCloseTo(0.8, 12);
  });

  it("rejects unknown keys", () => {
    expect(() => specFromConfig({ q: 2, dim: 2, smoothing: 1 })).toThrow(/unknown/);
  });
});

describe("genotype lineage", () => {
  it("reproduces the reference payload bytes", () => {
    const child = mutatePayload(generatePayload(7n), 9n, 0.6);
    expect(child.toString("hex")).toBe(
      "0700000000000000333333333333e33f0900000000000000",
    );
  });

  it("zero-strength mutate echoes the parent payload", () => {
    const parent = generatePayload(7n);
    expect(mutatePayload(parent, 99n, 0).equals(parent)).toBe(true);
  });

  it("replays the reference latent within 1e-9", () => {
    const child = mutatePayload(generatePayload(7n), 9n, 0.6);
    const z = latentOf(SPEC, child);
    expect(z[0]).toBeCloseTo(1.0942842020203707, 9);
    expect(z[1]).toBeCloseTo(-0.4089536638289724, 9);
  });

  it("rejects malformed payloads", () => {
    expect(() => latentOf(SPEC, Buffer.from([1, 2, 3]))).toThrow(/malformed/);
  });
});

describe("scoring", () => {
  const child = mutatePayload(generatePayload(7n), 9n, 0.6);
  const z = latentOf(SPEC, child);

  it("matches reference classifier scores exactly after round12", () => {
    expect(classify(SPEC, z)).toEqual([0.915700159253, 0.10262900268]);
  });

  it("matches reference cosine exactly after round12", () => {
    expect(similarity(SPEC, z)).toBe(0.936723406435);
  });

  it("origin is symmetric between the two bumps", () => {
    const y = classify(SPEC, [0, 0]);
    expect(y[0]).toBe(y[1]);
    expect(y[0]).toBeCloseTo(Math.exp(-0.5), 9);
    expect(similarity(SPEC, [0, 0])).toBe(0);
  });

  it("matches the reference phenotype id", () => {
    expect(phenotypeId(child)).toBe("tb-f967ad2cece1e62e");
  });
});

describe("mockBackend", () => {
  it("round-trips generate then evaluate", async () => {
    const backend = mockBackend(SPEC);
    const { genotype, phenotypeId: id } = await backend.generate("p", 7n);
    expect(genotype.toString("hex")).toBe("0700000000000000");
    const values = await backend.classify(id, ["a", "b"]);
    expect(values).toEqual(classify(SPEC, latentOf(SPEC, genotype)));
  });

  it("rejects unknown phenotypes and wrong label counts", async () => {
    const backend = mockBackend(SPEC);
    await expect(backend.classify("tb-ffffffffffffffff", ["a", "b"])).rejects.toThrow(
      /unknown phenotype/,
    );
    const { phenotypeId: id } = await backend.generate("p", 1n);
    await expect(backend.classify(id, ["a"])).rejects.toThrow(/labels/);
  });
});
