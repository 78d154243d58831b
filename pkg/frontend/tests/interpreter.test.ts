import { describe, expect, it } from 'vitest';
import { ExecutionError, runProgram } from '../src/interpreter.js';
import { parseProgram } from '../src/parser.js';
import { optimize } from '../src/passes.js';

function counts(text: string, shots = 500, seed = 0, fuel?: number) {
  const result = runProgram(parseProgram(text), shots, seed, fuel);
  return Object.fromEntries(result.counts);
}

const HEADER = 'qir-txt 1\n';

describe('interpreter', () => {
  it('deterministic circuit gives a single outcome', () => {
    const got = counts(HEADER + 'qreg q 1\ncreg c 1\nx q[0]\nmeasure q[0] -> c[0]\n');
    expect(got).toEqual({ '1': 500 });
  });

  it('bell pair stays in the even-parity subspace', () => {
    const got = counts(
      HEADER + 'qreg q 2\ncreg c 2\nh q[0]\ncx q[0] q[1]\nmeasure q[0] -> c[0]\nmeasure q[1] -> c[1]\n',
      2000,
      3,
    );
    expect(Object.keys(got).sort()).toEqual(['00', '11']);
    expect(got['00']).toBeGreaterThan(800);
    expect(got['11']).toBeGreaterThan(800);
  });

  it('same seed reproduces counts exactly', () => {
    const text = HEADER + 'qreg q 1\ncreg c 1\nh q[0]\nmeasure q[0] -> c[0]\n';
    expect(counts(text, 300, 9)).toEqual(counts(text, 300, 9));
  });

  it('zero-trip loop body never runs', () => {
    const got = counts(HEADER + 'qreg q 1\ncreg c 1\nfor 0 {\nx q[0]\n}\nmeasure q[0] -> c[0]\n');
    expect(got).toEqual({ '0': 500 });
  });

  it('continue makes trailing body dead', () => {
    const got = counts(
      HEADER + 'qreg q 2\ncreg c 1\nfor 5 {\nh q[1]\ncontinue\nx q[0]\n}\nmeasure q[0] -> c[0]\n',
    );
    expect(got).toEqual({ '0': 500 });
  });

  it('break leaves after one iteration', () => {
    const got = counts(
      HEADER + 'qreg q 1\ncreg c 1\nfor 5 {\nx q[0]\nbreak\n}\nmeasure q[0] -> c[0]\n',
    );
    expect(got).toEqual({ '1': 500 });
  });

  it('if takes the measured branch', () => {
    const got = counts(
      HEADER +
        'qreg q 2\ncreg c 2\nx q[0]\nmeasure q[0] -> c[0]\nif c[0] == 1 {\nx q[1]\n}\nmeasure q[1] -> c[1]\n',
    );
    expect(got).toEqual({ '11': 500 });
  });

  it('switch dispatches on the register value', () => {
    const got = counts(
      HEADER +
        'qreg q 2\ncreg result 1\ncreg g 1\nx q[0]\nmeasure q[0] -> g[0]\nswitch g {\ncase 0 {\nx q[1]\n}\ncase 1 {\nh q[1]\n}\n}\nmeasure q[1] -> result[0]\n',
      400,
      1,
    );
    // case 1 runs: q1 is a coin
    expect(Object.keys(got).sort()).toEqual(['0', '1']);
  });

  it('ctrl_on_int fires only on the matching pattern', () => {
    const dead = counts(
      HEADER + 'qreg q 1\nqreg ctrl 3\ncreg c 1\nctrl_on_int 7 ctrl[0] ctrl[1] ctrl[2] {\nx q[0]\n}\nmeasure q[0] -> c[0]\n',
    );
    expect(dead).toEqual({ '0': 500 });
    const live = counts(
      HEADER +
        'qreg q 1\nqreg ctrl 2\ncreg c 1\nx ctrl[0]\nx ctrl[1]\nctrl_on_int 3 ctrl[0] ctrl[1] {\nx q[0]\n}\nmeasure q[0] -> c[0]\n',
    );
    expect(live).toEqual({ '1': 500 });
  });

  it('while loop terminates on measured progress', () => {
    const got = counts(
      HEADER +
        'qreg q 1\ncreg result 1\ncreg fb 1\nh q[0]\nmeasure q[0] -> fb[0]\nwhile fb == 0 {\nh q[0]\nmeasure q[0] -> fb[0]\n}\nmeasure q[0] -> result[0]\n',
      300,
      5,
    );
    expect(got).toEqual({ '1': 300 });
  });

  it('hopeless while reports an infinite loop', () => {
    const text = HEADER + 'qreg q 1\ncreg c 1\nwhile c == 0 {\nx q[0]\n}\n';
    expect(() => runProgram(parseProgram(text), 2, 0)).toThrowError(ExecutionError);
    try {
      runProgram(parseProgram(text), 2, 0);
    } catch (exc) {
      expect((exc as ExecutionError).type).toBe('infinite_loop');
    }
  });

  it('reset is rejected as unsupported', () => {
    const text = HEADER + 'qreg q 1\ncreg c 1\nreset q[0]\nmeasure q[0] -> c[0]\n';
    try {
      runProgram(parseProgram(text), 1, 0);
      throw new Error('should have thrown');
    } catch (exc) {
      expect((exc as ExecutionError).type).toBe('unsupported');
    }
  });

  it('result register selects the reported bits', () => {
    const got = counts(
      HEADER + 'qreg q 2\ncreg result 1\ncreg scratch 1\nx q[0]\nx q[1]\nmeasure q[1] -> scratch[0]\nmeasure q[0] -> result[0]\n',
    );
    expect(got).toEqual({ '1': 500 });
  });

  it('optimization levels preserve behaviour', () => {
    const text =
      HEADER +
      'qreg q 1\ncreg c 1\nx q[0]\nx q[0]\nrz(1.0) q[0]\nrz(2.0) q[0]\nh q[0]\nh q[0]\nx q[0]\nmeasure q[0] -> c[0]\n';
    const program = parseProgram(text);
    const base = runProgram(program, 200, 4).counts;
    for (const level of [1, 2]) {
      const opt = optimize(program, level);
      const got = runProgram(opt, 200, 4).counts;
      expect(Object.fromEntries(got)).toEqual(Object.fromEntries(base));
    }
    const level2 = optimize(program, 2);
    const gateCount = (body: typeof program.body): number => body.length;
    expect(gateCount(level2.body)).toBeLessThan(gateCount(program.body));
  });
});
