import { describe, expect, it } from 'vitest';
import { StateVector, applyGate } from '../src/state.js';

function norm2(sv: StateVector): number {
  return sv.norm2();
}

describe('statevector kernels', () => {
  it('starts in |0...0>', () => {
    const sv = new StateVector(3);
    expect(sv.re[0]).toBe(1);
    expect(norm2(sv)).toBeCloseTo(1, 12);
  });

  it('x flips the target bit', () => {
    const sv = new StateVector(2);
    applyGate(sv, 'x', [1], []);
    expect(sv.re[2]).toBeCloseTo(1, 12);
  });

  it('h creates an even superposition', () => {
    const sv = new StateVector(1);
    applyGate(sv, 'h', [0], []);
    expect(sv.re[0]).toBeCloseTo(Math.SQRT1_2, 12);
    expect(sv.re[1]).toBeCloseTo(Math.SQRT1_2, 12);
  });

  it('cx entangles after h', () => {
    const sv = new StateVector(2);
    applyGate(sv, 'h', [0], []);
    applyGate(sv, 'cx', [0, 1], []);
    expect(sv.re[0] * sv.re[0]).toBeCloseTo(0.5, 9);
    expect(sv.re[3] * sv.re[3]).toBeCloseTo(0.5, 9);
    expect(sv.re[1]).toBeCloseTo(0, 12);
  });

  it('self-inverse pairs restore the state', () => {
    const names: Array<['h' | 'x' | 'cx' | 'swap' | 'ccx', number[]]> = [
      ['h', [1]],
      ['x', [0]],
      ['cx', [0, 2]],
      ['swap', [1, 2]],
      ['ccx', [0, 1, 2]],
    ];
    const sv = new StateVector(3);
    applyGate(sv, 'h', [0], []);
    applyGate(sv, 'ry', [1], [1.234]);
    applyGate(sv, 'cx', [0, 1], []);
    const snapshot = [sv.re.slice(), sv.im.slice()];
    for (const [name, qubits] of names) {
      applyGate(sv, name, qubits, []);
      applyGate(sv, name, qubits, []);
    }
    applyGate(sv, 'rz', [2], [0.7]);
    applyGate(sv, 'rz', [2], [-0.7]);
    for (let i = 0; i < sv.re.length; i++) {
      expect(sv.re[i]).toBeCloseTo(snapshot[0][i], 10);
      expect(sv.im[i]).toBeCloseTo(snapshot[1][i], 10);
    }
  });

  it('norm survives a long random gate run', () => {
    const sv = new StateVector(3);
    const kinds = ['h', 'rx', 'rz', 't', 's'] as const;
    for (let i = 0; i < 500; i++) {
      const name = kinds[i % kinds.length];
      applyGate(sv, name, [i % 3], name === 'rx' || name === 'rz' ? [0.1 * i] : []);
      if (i % 7 === 0) applyGate(sv, 'cx', [i % 3, (i + 1) % 3], []);
    }
    expect(norm2(sv)).toBeCloseTo(1, 9);
  });

  it('masked application only touches the matching subspace', () => {
    // control on qubit 1 being |1>: X on qubit 0 must not fire from |00>
    const sv = new StateVector(2);
    applyGate(sv, 'x', [0], [], 1 << 1, 1 << 1);
    expect(sv.re[0]).toBeCloseTo(1, 12);
    // now set the control and repeat
    applyGate(sv, 'x', [1], []);
    applyGate(sv, 'x', [0], [], 1 << 1, 1 << 1);
    expect(sv.re[3]).toBeCloseTo(1, 12);
  });

  it('collapse renormalizes', () => {
    const sv = new StateVector(1);
    applyGate(sv, 'ry', [0], [1.1]);
    const p1 = sv.probOne(0);
    sv.collapse(0, 1, p1);
    expect(norm2(sv)).toBeCloseTo(1, 12);
    expect(sv.probOne(0)).toBeCloseTo(1, 12);
  });
});
