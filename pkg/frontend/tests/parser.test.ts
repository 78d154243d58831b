import { describe, expect, it } from 'vitest';
import { ParseError, parseProgram } from '../src/parser.js';

const FIXTURE = `qir-txt 1
qreg q 3
qreg anc0 1
creg result 3
creg g0 1
meta n_qubits 3
meta seed 42
meta patterns if_test_dead
x anc0[0]
measure anc0[0] -> g0[0]
if g0 == 0 {
  #dead start 0 kind=if_test_dead category=input-dependent ancq=anc0[0] ancc=g0[0]
  x q[0]
  rzz(5.86706) q[1] q[2]
  #dead end 0
} else {
  h q[1]
}
for 5 {
  h q[1]
  continue
  x q[0]
}
switch g0 {
  case 0 {
    x q[0]
  }
  case 1 {
    h q[0]
  }
}
ctrl_on_int 3 q[0] q[1] {
  x q[2]
}
while g0 == 0 {
  measure q[0] -> g0[0]
}
measure q[0] -> result[0]
measure q[1] -> result[1]
measure q[2] -> result[2]
`;

describe('qir-txt parser', () => {
  it('parses the full construct zoo', () => {
    const p = parseProgram(FIXTURE);
    expect(p.qregs.map((r) => r.name)).toEqual(['q', 'anc0']);
    expect(p.cregs.map((r) => r.name)).toEqual(['result', 'g0']);
    const kinds = p.body.map((i) => i.kind);
    expect(kinds).toEqual([
      'gate',
      'measure',
      'if',
      'for',
      'switch',
      'ctrlOnInt',
      'while',
      'measure',
      'measure',
      'measure',
    ]);
    const ifNode = p.body[2];
    if (ifNode.kind !== 'if') throw new Error('expected if');
    expect(ifNode.thenBody).toHaveLength(2); // dead markers skipped
    expect(ifNode.elseBody).toHaveLength(1);
    const forNode = p.body[3];
    if (forNode.kind !== 'for') throw new Error('expected for');
    expect(forNode.count).toBe(5);
    expect(forNode.body.map((i) => i.kind)).toEqual(['gate', 'continue', 'gate']);
  });

  it('keeps rotation angles exact', () => {
    const p = parseProgram(FIXTURE);
    const ifNode = p.body[2];
    if (ifNode.kind !== 'if') throw new Error('expected if');
    const rzz = ifNode.thenBody[1];
    if (rzz.kind !== 'gate') throw new Error('expected gate');
    expect(rzz.params[0]).toBe(5.86706);
  });

  it('rejects an unknown header', () => {
    expect(() => parseProgram('qasm 2\n')).toThrow(ParseError);
  });

  it('rejects undeclared registers with a line number', () => {
    try {
      parseProgram('qir-txt 1\nqreg q 1\nx nope[0]\n');
      throw new Error('should have thrown');
    } catch (exc) {
      expect(exc).toBeInstanceOf(ParseError);
      expect((exc as ParseError).line).toBe(3);
    }
  });

  it('rejects unclosed blocks', () => {
    expect(() => parseProgram('qir-txt 1\nqreg q 1\nfor 2 {\nx q[0]\n')).toThrow(ParseError);
  });

  it('rejects arity mismatches', () => {
    expect(() => parseProgram('qir-txt 1\nqreg q 2\ncx q[0]\n')).toThrow(ParseError);
  });

  it('rejects non-gates inside ctrl_on_int', () => {
    const text = 'qir-txt 1\nqreg q 2\ncreg c 1\nctrl_on_int 1 q[1] {\nmeasure q[0] -> c[0]\n}\n';
    expect(() => parseProgram(text)).toThrow(ParseError);
  });
});
