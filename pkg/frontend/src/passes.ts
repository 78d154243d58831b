/**
 * The runtime's own optimization levels, selected by the request's
 * pipeline hint: 0 runs the program as-is, 1 cancels adjacent inverse
 * pairs, 2 additionally fuses adjacent same-axis rotations. All levels
 * preserve the output distribution.
 */
import { GateName, Instruction, Program } from './ir.js';

const SELF_INVERSE = new Set<GateName>(['h', 'x', 'y', 'z', 'cx', 'cz', 'ccx', 'swap']);
const DAGGER: Partial<Record<GateName, GateName>> = {
  s: 'sdg',
  sdg: 's',
  t: 'tdg',
  tdg: 't',
};
const ROTATIONS = new Set<GateName>(['rx', 'ry', 'rz', 'rzz']);

type GateIns = Extract<Instruction, { kind: 'gate' }>;

function sameTargets(a: GateIns, b: GateIns): boolean {
  return (
    a.targets.length === b.targets.length &&
    a.targets.every((t, i) => t.reg === b.targets[i].reg && t.offset === b.targets[i].offset)
  );
}

function cancels(a: GateIns, b: GateIns): boolean {
  if (!sameTargets(a, b)) return false;
  if (SELF_INVERSE.has(a.name) && a.name === b.name) return true;
  return DAGGER[a.name] === b.name;
}

function mapBlocks(body: Instruction[], fn: (block: Instruction[]) => Instruction[]): Instruction[] {
  const rebuilt = body.map((ins): Instruction => {
    switch (ins.kind) {
      case 'if':
        return { ...ins, thenBody: mapBlocks(ins.thenBody, fn), elseBody: mapBlocks(ins.elseBody, fn) };
      case 'while':
      case 'for':
        return { ...ins, body: mapBlocks(ins.body, fn) };
      case 'switch':
        return {
          ...ins,
          cases: ins.cases.map((c) => ({ value: c.value, body: mapBlocks(c.body, fn) })),
          defaultBody: mapBlocks(ins.defaultBody, fn),
        };
      case 'ctrlOnInt':
        return { ...ins, body: mapBlocks(ins.body, fn) };
      default:
        return ins;
    }
  });
  return fn(rebuilt);
}

function cancelBlock(body: Instruction[]): Instruction[] {
  const out: Instruction[] = [];
  for (const ins of body) {
    const prev = out[out.length - 1];
    if (
      ins.kind === 'gate' &&
      prev !== undefined &&
      prev.kind === 'gate' &&
      cancels(prev, ins)
    ) {
      out.pop();
    } else {
      out.push(ins);
    }
  }
  return out;
}

function mergeBlock(body: Instruction[]): Instruction[] {
  const out: Instruction[] = [];
  for (const ins of body) {
    const prev = out[out.length - 1];
    if (
      ins.kind === 'gate' &&
      ROTATIONS.has(ins.name) &&
      prev !== undefined &&
      prev.kind === 'gate' &&
      prev.name === ins.name &&
      sameTargets(prev, ins)
    ) {
      out.pop();
      let angle = (prev.params[0] + ins.params[0]) % (2 * Math.PI);
      if (angle < 0) angle += 2 * Math.PI;
      out.push({ ...prev, params: [angle] });
    } else {
      out.push(ins);
    }
  }
  return out;
}

export function optimize(program: Program, level: number): Program {
  let body = program.body;
  if (level >= 1) body = mapBlocks(body, cancelBlock);
  if (level >= 2) body = mapBlocks(body, mergeBlock);
  return { ...program, body };
}
