/**
 * Program representation for the tsq runtime.
 *
 * Mirrors the structure of the canonical `qir-txt` text format: registers,
 * a tree of instructions, and (ignored here) dead-region markers. Bit
 * conventions follow the format documentation: classical bit c[0] is the
 * least-significant bit of its register value, and program outcomes read
 * the register named `result` when present, otherwise the concatenation of
 * all classical registers with the most recently declared most
 * significant.
 */

export interface Register {
  name: string;
  width: number;
}

export interface QubitRef {
  reg: number;
  offset: number;
}

export interface ClbitRef {
  reg: number;
  offset: number;
}

export type GateName =
  | 'h'
  | 'x'
  | 'y'
  | 'z'
  | 's'
  | 'sdg'
  | 't'
  | 'tdg'
  | 'rx'
  | 'ry'
  | 'rz'
  | 'rzz'
  | 'cx'
  | 'cz'
  | 'ccx'
  | 'swap';

export const GATE_ARITY: Record<GateName, number> = {
  h: 1, x: 1, y: 1, z: 1, s: 1, sdg: 1, t: 1, tdg: 1,
  rx: 1, ry: 1, rz: 1, rzz: 2, cx: 2, cz: 2, ccx: 3, swap: 2,
};

export const GATE_PARAMS: Record<GateName, number> = {
  h: 0, x: 0, y: 0, z: 0, s: 0, sdg: 0, t: 0, tdg: 0,
  rx: 1, ry: 1, rz: 1, rzz: 1, cx: 0, cz: 0, ccx: 0, swap: 0,
};

/** Equality test against one classical bit (`bit` set) or a register. */
export interface Condition {
  creg: number;
  bit: number | null;
  value: number;
}

export type Instruction =
  | { kind: 'gate'; name: GateName; params: number[]; targets: QubitRef[] }
  | { kind: 'measure'; qubit: QubitRef; clbit: ClbitRef }
  | { kind: 'reset'; qubit: QubitRef }
  | { kind: 'if'; cond: Condition; thenBody: Instruction[]; elseBody: Instruction[] }
  | { kind: 'while'; cond: Condition; body: Instruction[] }
  | { kind: 'for'; count: number; body: Instruction[] }
  | {
      kind: 'switch';
      creg: number;
      bit: number | null;
      cases: Array<{ value: number; body: Instruction[] }>;
      defaultBody: Instruction[];
    }
  | { kind: 'break' }
  | { kind: 'continue' }
  | { kind: 'ctrlOnInt'; value: number; controls: QubitRef[]; body: Instruction[] };

export interface Program {
  qregs: Register[];
  cregs: Register[];
  body: Instruction[];
}

/** Constructs the runtime can execute; advertised in the adapter hello. */
export const CAPABILITIES = [
  'gates',
  'measure',
  'if',
  'while',
  'for',
  'switch',
  'break',
  'continue',
  'ctrl_on_int',
] as const;

/** Flattened index of a qubit (registers concatenated in declaration order). */
export function flatQubit(p: Program, q: QubitRef): number {
  let base = 0;
  for (let r = 0; r < q.reg; r++) base += p.qregs[r].width;
  return base + q.offset;
}

export function totalQubits(p: Program): number {
  return p.qregs.reduce((acc, r) => acc + r.width, 0);
}

/** Output registers per the format's result convention. */
export function outputRegs(p: Program): number[] {
  const named = p.cregs.findIndex((r) => r.name === 'result');
  if (named >= 0) return [named];
  return p.cregs.map((_, i) => i);
}

export function outputWidth(p: Program): number {
  return outputRegs(p).reduce((acc, i) => acc + p.cregs[i].width, 0);
}

/** Render classical register values as the outcome bitstring (MSB first). */
export function outcomeKey(p: Program, cregValues: number[]): string {
  const regs = outputRegs(p);
  let bits = '';
  for (const i of regs) {
    bits = cregValues[i].toString(2).padStart(p.cregs[i].width, '0') + bits;
  }
  return bits;
}
