/**
 * Shot-based program execution with classical control flow.
 *
 * Runs each shot on a fresh statevector, collapsing at measurements with
 * per-shot randomness. While/for loops carry a fuel bound; a loop that
 * provably cannot change its condition (nothing in the body writes the
 * condition register, no break can fire) reports an infinite loop as soon
 * as it is entered rather than burning fuel.
 */
import {
  Condition,
  Instruction,
  Program,
  flatQubit,
  outcomeKey,
  totalQubits,
} from './ir.js';
import { ShotRng } from './rng.js';
import { StateVector, applyGate } from './state.js';

export const DEFAULT_FUEL = 10_000;

export class ExecutionError extends Error {
  constructor(readonly type: string, message: string) {
    super(message);
    this.name = 'ExecutionError';
  }
}

export interface RunResult {
  counts: Map<string, number>;
  shots: number;
}

type Flow = 'normal' | 'break' | 'continue';

function condHolds(cond: Condition, cregs: number[]): boolean {
  let value = cregs[cond.creg];
  if (cond.bit !== null) value = (value >> cond.bit) & 1;
  return value === cond.value;
}

function writesCreg(body: Instruction[], creg: number): boolean {
  for (const ins of body) {
    if (ins.kind === 'measure' && ins.clbit.reg === creg) return true;
    if (ins.kind === 'if') {
      if (writesCreg(ins.thenBody, creg) || writesCreg(ins.elseBody, creg)) return true;
    } else if (ins.kind === 'while' || ins.kind === 'for') {
      if (writesCreg(ins.body, creg)) return true;
    } else if (ins.kind === 'switch') {
      for (const c of ins.cases) if (writesCreg(c.body, creg)) return true;
      if (writesCreg(ins.defaultBody, creg)) return true;
    }
  }
  return false;
}

function hasOwnBreak(body: Instruction[]): boolean {
  for (const ins of body) {
    if (ins.kind === 'break') return true;
    if (ins.kind === 'if') {
      if (hasOwnBreak(ins.thenBody) || hasOwnBreak(ins.elseBody)) return true;
    } else if (ins.kind === 'switch') {
      for (const c of ins.cases) if (hasOwnBreak(c.body)) return true;
      if (hasOwnBreak(ins.defaultBody)) return true;
    }
    // nested loops own their breaks
  }
  return false;
}

class Shot {
  readonly sv: StateVector;
  readonly cregs: number[];

  constructor(
    readonly program: Program,
    readonly rng: ShotRng,
    readonly fuel: number,
  ) {
    this.sv = new StateVector(totalQubits(program));
    this.cregs = program.cregs.map(() => 0);
  }

  run(): string {
    this.execBlock(this.program.body);
    return outcomeKey(this.program, this.cregs);
  }

  private measure(q: number): 0 | 1 {
    const p1 = this.sv.probOne(q);
    const outcome = this.rng.next() < p1 ? 1 : 0;
    this.sv.collapse(q, outcome, outcome ? p1 : 1 - p1);
    return outcome;
  }

  private execBlock(body: Instruction[]): Flow {
    for (const ins of body) {
      const flow = this.execIns(ins);
      if (flow !== 'normal') return flow;
    }
    return 'normal';
  }

  private execIns(ins: Instruction): Flow {
    switch (ins.kind) {
      case 'gate': {
        const qubits = ins.targets.map((t) => flatQubit(this.program, t));
        applyGate(this.sv, ins.name, qubits, ins.params);
        return 'normal';
      }
      case 'measure': {
        const outcome = this.measure(flatQubit(this.program, ins.qubit));
        const { reg, offset } = ins.clbit;
        this.cregs[reg] = (this.cregs[reg] & ~(1 << offset)) | (outcome << offset);
        return 'normal';
      }
      case 'reset':
        throw new ExecutionError('unsupported', 'reset is not supported by the tsq runtime');
      case 'if':
        return this.execBlock(condHolds(ins.cond, this.cregs) ? ins.thenBody : ins.elseBody);
      case 'while': {
        if (condHolds(ins.cond, this.cregs)) {
          if (!writesCreg(ins.body, ins.cond.creg) && !hasOwnBreak(ins.body)) {
            throw new ExecutionError(
              'infinite_loop',
              'loop condition can never change',
            );
          }
        }
        let iters = 0;
        while (condHolds(ins.cond, this.cregs)) {
          iters += 1;
          if (iters > this.fuel) {
            throw new ExecutionError('infinite_loop', `loop fuel exhausted after ${this.fuel} iterations`);
          }
          const flow = this.execBlock(ins.body);
          if (flow === 'break') break;
        }
        return 'normal';
      }
      case 'for': {
        if (ins.count > this.fuel) {
          throw new ExecutionError('infinite_loop', `loop count ${ins.count} above fuel bound`);
        }
        for (let k = 0; k < ins.count; k++) {
          const flow = this.execBlock(ins.body);
          if (flow === 'break') break;
        }
        return 'normal';
      }
      case 'switch': {
        let value = this.cregs[ins.creg];
        if (ins.bit !== null) value = (value >> ins.bit) & 1;
        for (const c of ins.cases) {
          if (c.value === value) return this.execBlock(c.body);
        }
        return this.execBlock(ins.defaultBody);
      }
      case 'break':
        return 'break';
      case 'continue':
        return 'continue';
      case 'ctrlOnInt': {
        let mask = 0;
        let pattern = 0;
        ins.controls.forEach((c, j) => {
          const bit = 1 << flatQubit(this.program, c);
          mask |= bit;
          if ((ins.value >> j) & 1) pattern |= bit;
        });
        for (const g of ins.body) {
          if (g.kind !== 'gate') {
            throw new ExecutionError('validation', 'ctrl_on_int body must be unitary');
          }
          const qubits = g.targets.map((t) => flatQubit(this.program, t));
          applyGate(this.sv, g.name, qubits, g.params, mask, pattern);
        }
        return 'normal';
      }
    }
  }
}

export function runProgram(
  program: Program,
  shots: number,
  seed: number | bigint,
  fuel: number = DEFAULT_FUEL,
): RunResult {
  if (!Number.isInteger(shots) || shots < 0) {
    throw new ExecutionError('validation', `bad shot count ${shots}`);
  }
  const counts = new Map<string, number>();
  for (let i = 0; i < shots; i++) {
    const shot = new Shot(program, new ShotRng(seed, i), fuel);
    const key = shot.run();
    counts.set(key, (counts.get(key) ?? 0) + 1);
  }
  return { counts, shots };
}
