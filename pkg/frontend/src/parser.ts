/**
 * Parser for the canonical `qir-txt` text format (version 1).
 *
 * Dead-region marker lines are tolerated and ignored: the adapter executes
 * programs, it does not need span bookkeeping. Anything else malformed
 * raises a ParseError with the offending line number.
 */
import {
  Condition,
  GATE_ARITY,
  GATE_PARAMS,
  GateName,
  Instruction,
  Program,
  QubitRef,
  ClbitRef,
} from './ir.js';

export class ParseError extends Error {
  constructor(message: string, readonly line: number) {
    super(`line ${line}: ${message}`);
    this.name = 'ParseError';
  }
}

const HEADER = 'qir-txt 1';
const GATE_NAMES = new Set(Object.keys(GATE_ARITY));

class Parser {
  private pos = 0;
  private readonly lines: string[];
  readonly qnames = new Map<string, number>();
  readonly cnames = new Map<string, number>();
  readonly program: Program = { qregs: [], cregs: [], body: [] };

  constructor(text: string) {
    this.lines = text.split('\n');
  }

  fail(message: string): never {
    throw new ParseError(message, this.pos);
  }

  next(): string | null {
    while (this.pos < this.lines.length) {
      const line = this.lines[this.pos].trim();
      this.pos += 1;
      if (line.length > 0) return line;
    }
    return null;
  }

  pushBack(): void {
    this.pos -= 1;
  }

  parseQubit(tok: string): QubitRef {
    const ref = this.splitRef(tok);
    const reg = this.qnames.get(ref.name);
    if (reg === undefined) this.fail(`undeclared quantum register '${ref.name}'`);
    if (ref.offset >= this.program.qregs[reg].width) {
      this.fail(`qubit offset ${ref.offset} outside '${ref.name}'`);
    }
    return { reg, offset: ref.offset };
  }

  parseClbit(tok: string): ClbitRef {
    const ref = this.splitRef(tok);
    const reg = this.cnames.get(ref.name);
    if (reg === undefined) this.fail(`undeclared classical register '${ref.name}'`);
    if (ref.offset >= this.program.cregs[reg].width) {
      this.fail(`clbit offset ${ref.offset} outside '${ref.name}'`);
    }
    return { reg, offset: ref.offset };
  }

  private splitRef(tok: string): { name: string; offset: number } {
    const m = /^([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\]$/.exec(tok);
    if (!m) this.fail(`expected reg[offset], got '${tok}'`);
    return { name: m[1], offset: Number(m[2]) };
  }

  parseSubject(tok: string): { creg: number; bit: number | null } {
    if (tok.includes('[')) {
      const c = this.parseClbit(tok);
      return { creg: c.reg, bit: c.offset };
    }
    const creg = this.cnames.get(tok);
    if (creg === undefined) this.fail(`undeclared classical register '${tok}'`);
    return { creg, bit: null };
  }

  parseCondition(text: string): Condition {
    const parts = text.split('==');
    if (parts.length !== 2) this.fail(`expected '<subject> == <value>' in '${text}'`);
    const subject = this.parseSubject(parts[0].trim());
    const value = Number(parts[1].trim());
    if (!Number.isInteger(value) || value < 0) this.fail(`bad condition value '${parts[1].trim()}'`);
    return { ...subject, value };
  }

  parseBlock(terminators: string[]): { body: Instruction[]; term: string } {
    const body: Instruction[] = [];
    for (;;) {
      const line = this.next();
      if (line === null) {
        if (terminators.includes('<eof>')) return { body, term: '<eof>' };
        this.fail('unexpected end of input; unclosed block');
      }
      if (line.startsWith('#dead start') || line.startsWith('#dead end')) continue;
      if (line.startsWith('#')) this.fail(`unknown directive '${line}'`);
      if (terminators.includes(line)) return { body, term: line };
      body.push(this.parseInstruction(line));
    }
  }

  parseInstruction(line: string): Instruction {
    const toks = line.split(/\s+/);
    const head = toks[0];
    if (head === 'measure') {
      if (toks.length !== 4 || toks[2] !== '->') this.fail("expected 'measure q[i] -> c[j]'");
      return { kind: 'measure', qubit: this.parseQubit(toks[1]), clbit: this.parseClbit(toks[3]) };
    }
    if (head === 'reset') {
      if (toks.length !== 2) this.fail("expected 'reset q[i]'");
      return { kind: 'reset', qubit: this.parseQubit(toks[1]) };
    }
    if (head === 'break') return { kind: 'break' };
    if (head === 'continue') return { kind: 'continue' };
    if (head === 'if') {
      if (!line.endsWith('{')) this.fail("expected '{' after if condition");
      const cond = this.parseCondition(line.slice(2, -1).trim());
      const thenPart = this.parseBlock(['}', '} else {']);
      let elseBody: Instruction[] = [];
      if (thenPart.term === '} else {') elseBody = this.parseBlock(['}']).body;
      return { kind: 'if', cond, thenBody: thenPart.body, elseBody };
    }
    if (head === 'while') {
      if (!line.endsWith('{')) this.fail("expected '{' after while condition");
      const cond = this.parseCondition(line.slice(5, -1).trim());
      return { kind: 'while', cond, body: this.parseBlock(['}']).body };
    }
    if (head === 'for') {
      if (toks.length !== 3 || toks[2] !== '{') this.fail("expected 'for <count> {'");
      const count = Number(toks[1]);
      if (!Number.isInteger(count) || count < 0) this.fail(`bad loop count '${toks[1]}'`);
      return { kind: 'for', count, body: this.parseBlock(['}']).body };
    }
    if (head === 'switch') {
      if (toks.length !== 3 || toks[2] !== '{') this.fail("expected 'switch <subject> {'");
      const subject = this.parseSubject(toks[1]);
      const cases: Array<{ value: number; body: Instruction[] }> = [];
      let defaultBody: Instruction[] = [];
      for (;;) {
        const sub = this.next();
        if (sub === null) this.fail('unclosed switch');
        if (sub === '}') break;
        const stoks = sub.split(/\s+/);
        if (stoks[0] === 'case' && stoks.length === 3 && stoks[2] === '{') {
          const value = Number(stoks[1]);
          if (!Number.isInteger(value) || value < 0) this.fail(`bad case value '${stoks[1]}'`);
          cases.push({ value, body: this.parseBlock(['}']).body });
        } else if (sub === 'default {') {
          defaultBody = this.parseBlock(['}']).body;
        } else {
          this.fail(`expected case/default inside switch, got '${sub}'`);
        }
      }
      return { kind: 'switch', ...subject, cases, defaultBody };
    }
    if (head === 'ctrl_on_int') {
      if (toks.length < 4 || toks[toks.length - 1] !== '{') {
        this.fail("expected 'ctrl_on_int <value> <controls...> {'");
      }
      const value = Number(toks[1]);
      if (!Number.isInteger(value) || value < 0) this.fail(`bad control value '${toks[1]}'`);
      const controls = toks.slice(2, -1).map((t) => this.parseQubit(t));
      const inner = this.parseBlock(['}']).body;
      for (const ins of inner) {
        if (ins.kind !== 'gate') this.fail('ctrl_on_int body must contain only gates');
      }
      if (value >= 2 ** controls.length) this.fail(`control value ${value} outside range`);
      return { kind: 'ctrlOnInt', value, controls, body: inner };
    }
    // gate: name[(params)] targets...
    let name = head;
    let params: number[] = [];
    const paren = head.indexOf('(');
    if (paren >= 0) {
      if (!head.endsWith(')')) this.fail(`bad parameter list in '${head}'`);
      name = head.slice(0, paren);
      params = head
        .slice(paren + 1, -1)
        .split(',')
        .filter((s) => s.trim().length > 0)
        .map((s) => {
          const v = Number(s);
          if (!Number.isFinite(v)) this.fail(`bad angle '${s}'`);
          return v;
        });
    }
    if (!GATE_NAMES.has(name)) this.fail(`unknown instruction '${name}'`);
    const gate = name as GateName;
    const targets = toks.slice(1).map((t) => this.parseQubit(t));
    if (targets.length !== GATE_ARITY[gate]) {
      this.fail(`${gate} expects ${GATE_ARITY[gate]} targets, got ${targets.length}`);
    }
    if (params.length !== GATE_PARAMS[gate]) {
      this.fail(`${gate} expects ${GATE_PARAMS[gate]} angles, got ${params.length}`);
    }
    const seen = new Set(targets.map((t) => `${t.reg}:${t.offset}`));
    if (seen.size !== targets.length) this.fail(`${gate} targets must be distinct`);
    return { kind: 'gate', name: gate, params, targets };
  }
}

export function parseProgram(text: string): Program {
  const parser = new Parser(text);
  const header = parser.next();
  if (header !== HEADER) parser.fail(`expected header '${HEADER}'`);
  for (;;) {
    const line = parser.next();
    if (line === null) return parser.program;
    const toks = line.split(/\s+/);
    if (toks[0] === 'qreg' && toks.length === 3) {
      const width = Number(toks[2]);
      if (!Number.isInteger(width) || width < 1) parser.fail(`bad register width '${toks[2]}'`);
      if (parser.qnames.has(toks[1]) || parser.cnames.has(toks[1])) {
        parser.fail(`duplicate register '${toks[1]}'`);
      }
      parser.qnames.set(toks[1], parser.program.qregs.length);
      parser.program.qregs.push({ name: toks[1], width });
    } else if (toks[0] === 'creg' && toks.length === 3) {
      const width = Number(toks[2]);
      if (!Number.isInteger(width) || width < 1) parser.fail(`bad register width '${toks[2]}'`);
      if (parser.qnames.has(toks[1]) || parser.cnames.has(toks[1])) {
        parser.fail(`duplicate register '${toks[1]}'`);
      }
      parser.cnames.set(toks[1], parser.program.cregs.length);
      parser.program.cregs.push({ name: toks[1], width });
    } else if (toks[0] === 'meta') {
      continue; // generator metadata is irrelevant to execution
    } else {
      parser.pushBack();
      break;
    }
  }
  parser.program.body = parser.parseBlock(['<eof>']).body;
  return parser.program;
}
