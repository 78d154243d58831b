/**
 * Counter-based measurement randomness.
 *
 * Shot i of a run with seed s owns the stream keyed by mix64(s + (i+1)*G);
 * its m-th measurement event reads word m. Shots are therefore
 * order-independent and reproducible from (seed, shot index) alone.
 */
const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const M1 = 0xbf58476d1ce4e5b9n;
const M2 = 0x94d049bb133111ebn;

export function mix64(x: bigint): bigint {
  let z = x & MASK;
  z ^= z >> 30n;
  z = (z * M1) & MASK;
  z ^= z >> 27n;
  z = (z * M2) & MASK;
  z ^= z >> 31n;
  return z;
}

export class ShotRng {
  private readonly key: bigint;
  private draws = 0n;

  constructor(seed: number | bigint, shotIndex: number) {
    const s = BigInt(seed) & MASK;
    this.key = mix64((s + (BigInt(shotIndex) + 1n) * GOLDEN) & MASK);
  }

  /** Uniform double in [0, 1). */
  next(): number {
    this.draws += 1n;
    const word = mix64((this.key + this.draws * GOLDEN) & MASK);
    return Number(word >> 11n) / 2 ** 53;
  }
}
