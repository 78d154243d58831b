/**
 * Dense statevector with masked gate application.
 *
 * Amplitudes are split re/im Float64Arrays; flattened qubit g is bit g of
 * the amplitude index. Every gate can be applied under a control mask so
 * ctrl_on_int blocks reuse the same kernels restricted to the matching
 * subspace.
 */
import { GateName } from './ir.js';

export interface Complex {
  re: number;
  im: number;
}

export class StateVector {
  readonly n: number;
  re: Float64Array;
  im: Float64Array;

  constructor(n: number) {
    if (n < 1 || n > 24) throw new Error(`unsupported qubit count ${n}`);
    this.n = n;
    this.re = new Float64Array(1 << n);
    this.im = new Float64Array(1 << n);
    this.re[0] = 1;
  }

  norm2(): number {
    let acc = 0;
    for (let i = 0; i < this.re.length; i++) {
      acc += this.re[i] * this.re[i] + this.im[i] * this.im[i];
    }
    return acc;
  }

  /** Probability of measuring |1> on qubit q (within the full space). */
  probOne(q: number): number {
    const bit = 1 << q;
    let acc = 0;
    for (let i = 0; i < this.re.length; i++) {
      if (i & bit) acc += this.re[i] * this.re[i] + this.im[i] * this.im[i];
    }
    return acc;
  }

  /** Collapse qubit q to `outcome` and renormalize. */
  collapse(q: number, outcome: 0 | 1, prob: number): void {
    const bit = 1 << q;
    const scale = 1 / Math.sqrt(Math.max(prob, 1e-300));
    for (let i = 0; i < this.re.length; i++) {
      const hasBit = (i & bit) !== 0;
      if (hasBit === (outcome === 1)) {
        this.re[i] *= scale;
        this.im[i] *= scale;
      } else {
        this.re[i] = 0;
        this.im[i] = 0;
      }
    }
  }

  /** Move the |1> component of qubit q into |0> (post-collapse reset). */
  zeroQubit(q: number): void {
    const bit = 1 << q;
    for (let i = 0; i < this.re.length; i++) {
      if (i & bit) {
        const j = i & ~bit;
        this.re[j] = this.re[i];
        this.im[j] = this.im[i];
        this.re[i] = 0;
        this.im[i] = 0;
      }
    }
  }
}

type Mat2 = [Complex, Complex, Complex, Complex]; // row-major 2x2

const Z = (re: number, im = 0): Complex => ({ re, im });
const SQ2 = 1 / Math.SQRT2;

function mat1(name: GateName, theta: number): Mat2 {
  switch (name) {
    case 'h':
      return [Z(SQ2), Z(SQ2), Z(SQ2), Z(-SQ2)];
    case 'x':
      return [Z(0), Z(1), Z(1), Z(0)];
    case 'y':
      return [Z(0), Z(0, -1), Z(0, 1), Z(0)];
    case 'z':
      return [Z(1), Z(0), Z(0), Z(-1)];
    case 's':
      return [Z(1), Z(0), Z(0), Z(0, 1)];
    case 'sdg':
      return [Z(1), Z(0), Z(0), Z(0, -1)];
    case 't':
      return [Z(1), Z(0), Z(0), Z(SQ2, SQ2)];
    case 'tdg':
      return [Z(1), Z(0), Z(0), Z(SQ2, -SQ2)];
    case 'rx': {
      const c = Math.cos(theta / 2);
      const s = Math.sin(theta / 2);
      return [Z(c), Z(0, -s), Z(0, -s), Z(c)];
    }
    case 'ry': {
      const c = Math.cos(theta / 2);
      const s = Math.sin(theta / 2);
      return [Z(c), Z(-s), Z(s), Z(c)];
    }
    case 'rz': {
      const c = Math.cos(theta / 2);
      const s = Math.sin(theta / 2);
      return [Z(c, -s), Z(0), Z(0), Z(c, s)];
    }
    default:
      throw new Error(`not a single-qubit gate: ${name}`);
  }
}

/**
 * Apply a gate restricted to amplitude indices where
 * `(index & ctrlMask) === ctrlPattern`. A zero mask means unconditional.
 */
export function applyGate(
  sv: StateVector,
  name: GateName,
  qubits: number[],
  params: number[],
  ctrlMask = 0,
  ctrlPattern = 0,
): void {
  const { re, im } = sv;
  const size = re.length;
  const matches = (i: number) => (i & ctrlMask) === ctrlPattern;

  switch (name) {
    case 'cx': {
      const [cq, tq] = qubits.map((q) => 1 << q);
      for (let i = 0; i < size; i++) {
        if ((i & cq) && !(i & tq) && matches(i)) {
          const j = i | tq;
          [re[i], re[j]] = [re[j], re[i]];
          [im[i], im[j]] = [im[j], im[i]];
        }
      }
      return;
    }
    case 'cz': {
      const [aq, bq] = qubits.map((q) => 1 << q);
      for (let i = 0; i < size; i++) {
        if ((i & aq) && (i & bq) && matches(i)) {
          re[i] = -re[i];
          im[i] = -im[i];
        }
      }
      return;
    }
    case 'ccx': {
      const [c1, c2, tq] = qubits.map((q) => 1 << q);
      for (let i = 0; i < size; i++) {
        if ((i & c1) && (i & c2) && !(i & tq) && matches(i)) {
          const j = i | tq;
          [re[i], re[j]] = [re[j], re[i]];
          [im[i], im[j]] = [im[j], im[i]];
        }
      }
      return;
    }
    case 'swap': {
      const [aq, bq] = qubits.map((q) => 1 << q);
      for (let i = 0; i < size; i++) {
        if ((i & aq) && !(i & bq) && matches(i)) {
          const j = (i & ~aq) | bq;
          [re[i], re[j]] = [re[j], re[i]];
          [im[i], im[j]] = [im[j], im[i]];
        }
      }
      return;
    }
    case 'rzz': {
      const [aq, bq] = qubits.map((q) => 1 << q);
      const c = Math.cos(params[0] / 2);
      const s = Math.sin(params[0] / 2);
      for (let i = 0; i < size; i++) {
        if (!matches(i)) continue;
        // e^{-i theta/2} on equal bits, e^{+i theta/2} on unequal
        const sign = ((i & aq) !== 0) === ((i & bq) !== 0) ? -1 : 1;
        const r = re[i];
        re[i] = r * c - im[i] * sign * s;
        im[i] = im[i] * c + r * sign * s;
      }
      return;
    }
    default: {
      const bit = 1 << qubits[0];
      const [m00, m01, m10, m11] = mat1(name, params[0] ?? 0);
      for (let i = 0; i < size; i++) {
        if ((i & bit) || !matches(i)) continue;
        const j = i | bit;
        if (!matches(j)) continue;
        const ar = re[i];
        const ai = im[i];
        const br = re[j];
        const bi = im[j];
        re[i] = m00.re * ar - m00.im * ai + m01.re * br - m01.im * bi;
        im[i] = m00.re * ai + m00.im * ar + m01.re * bi + m01.im * br;
        re[j] = m10.re * ar - m10.im * ai + m11.re * br - m11.im * bi;
        im[j] = m10.re * ai + m10.im * ar + m11.re * bi + m11.im * br;
      }
      return;
    }
  }
}
