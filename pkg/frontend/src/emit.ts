/**
 * Render a program as standalone tsq source: a TypeScript module that
 * rebuilds the circuit through the runtime's instruction constructors and
 * runs it. This is the native-dialect form stored alongside bug reports so
 * a failure can be replayed without the harness.
 */
import { Instruction, Program } from './ir.js';

export class UnsupportedConstruct extends Error {
  constructor(construct: string) {
    super(`construct not supported by the tsq dialect: ${construct}`);
    this.name = 'UnsupportedConstruct';
  }
}

function emitIns(ins: Instruction, indent: string): string {
  const ref = (r: { reg: number; offset: number }) => `{ reg: ${r.reg}, offset: ${r.offset} }`;
  switch (ins.kind) {
    case 'gate':
      return (
        `${indent}{ kind: 'gate', name: '${ins.name}', params: [${ins.params.join(', ')}], ` +
        `targets: [${ins.targets.map(ref).join(', ')}] },`
      );
    case 'measure':
      return `${indent}{ kind: 'measure', qubit: ${ref(ins.qubit)}, clbit: ${ref(ins.clbit)} },`;
    case 'reset':
      throw new UnsupportedConstruct('reset');
    case 'if':
      return [
        `${indent}{ kind: 'if', cond: { creg: ${ins.cond.creg}, bit: ${ins.cond.bit}, value: ${ins.cond.value} }, thenBody: [`,
        ...ins.thenBody.map((i) => emitIns(i, indent + '  ')),
        `${indent}], elseBody: [`,
        ...ins.elseBody.map((i) => emitIns(i, indent + '  ')),
        `${indent}] },`,
      ].join('\n');
    case 'while':
      return [
        `${indent}{ kind: 'while', cond: { creg: ${ins.cond.creg}, bit: ${ins.cond.bit}, value: ${ins.cond.value} }, body: [`,
        ...ins.body.map((i) => emitIns(i, indent + '  ')),
        `${indent}] },`,
      ].join('\n');
    case 'for':
      return [
        `${indent}{ kind: 'for', count: ${ins.count}, body: [`,
        ...ins.body.map((i) => emitIns(i, indent + '  ')),
        `${indent}] },`,
      ].join('\n');
    case 'switch':
      return [
        `${indent}{ kind: 'switch', creg: ${ins.creg}, bit: ${ins.bit}, cases: [`,
        ...ins.cases.map((c) =>
          [
            `${indent}  { value: ${c.value}, body: [`,
            ...c.body.map((i) => emitIns(i, indent + '    ')),
            `${indent}  ] },`,
          ].join('\n'),
        ),
        `${indent}], defaultBody: [`,
        ...ins.defaultBody.map((i) => emitIns(i, indent + '  ')),
        `${indent}] },`,
      ].join('\n');
    case 'break':
      return `${indent}{ kind: 'break' },`;
    case 'continue':
      return `${indent}{ kind: 'continue' },`;
    case 'ctrlOnInt':
      return [
        `${indent}{ kind: 'ctrlOnInt', value: ${ins.value}, controls: [${ins.controls
          .map(ref)
          .join(', ')}], body: [`,
        ...ins.body.map((i) => emitIns(i, indent + '  ')),
        `${indent}] },`,
      ].join('\n');
  }
}

export function emitSource(program: Program, runtimeImport = 'tsq-adapter'): string {
  const regs = (rs: { name: string; width: number }[]) =>
    rs.map((r) => `{ name: '${r.name}', width: ${r.width} }`).join(', ');
  const lines = [
    `import { runProgram, type Program } from '${runtimeImport}';`,
    '',
    'export const program: Program = {',
    `  qregs: [${regs(program.qregs)}],`,
    `  cregs: [${regs(program.cregs)}],`,
    '  body: [',
    ...program.body.map((i) => emitIns(i, '    ')),
    '  ],',
    '};',
    '',
    'export function main(shots = 1024, seed = 0) {',
    '  return runProgram(program, shots, seed);',
    '}',
    '',
  ];
  return lines.join('\n');
}
