/**
 * Counter-based RNG shared with the engine's builtin testbed.
 *
 * The algorithm is pinned bit-exactly in PROTOCOL.md: a splitmix-style
 * 64-bit mix over `seed + (i + 1) * golden`, uniforms from the top 53
 * bits, and Box-Muller pairs for standard normals.  All 64-bit work is
 * done in BigInt and only the final uniforms drop down to doubles, so
 * both sides of the wire see the same streams.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX_A = 0xbf58476d1ce4e5b9n;
const MIX_B = 0x94d049bb133111ebn;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = (z ^ (z >> 30n)) * MIX_A & MASK64;
  z = (z ^ (z >> 27n)) * MIX_B & MASK64;
  return z ^ (z >> 31n);
}

export function u64At(seed: bigint, index: number): bigint {
  const counter = (seed + (BigInt(index) + 1n) * GOLDEN) & MASK64;
  return mix64(counter);
}

/** Uniform draw in (0, 1], 53-bit resolution. */
export function uniformAt(seed: bigint, index: number): number {
  return Number((u64At(seed, index) >> 11n) + 1n) * 2 ** -53;
}

/** k-th standard normal of the stream, via Box-Muller over pairs. */
export function normalAt(seed: bigint, index: number): number {
  const pair = Math.floor(index / 2);
  const u1 = uniformAt(seed, 2 * pair);
  const u2 = uniformAt(seed, 2 * pair + 1);
  const r = Math.sqrt(-2 * Math.log(u1));
  const a = 2 * Math.PI * u2;
  return index % 2 === 0 ? r * Math.cos(a) : r * Math.sin(a);
}

export function normalsAt(seed: bigint, n: number): number[] {
  const out = new Array<number>(n);
  for (let i = 0; i < n; i++) out[i] = normalAt(seed, i);
  return out;
}

/** Round to 12 significant decimal digits (correctly-rounded decimal form). */
export function round12(x: number): number {
  if (!Number.isFinite(x)) throw new Error(`round12 of non-finite value ${x}`);
  return Number(x.toExponential(11));
}
