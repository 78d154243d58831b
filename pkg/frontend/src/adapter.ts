/**
 * Line-delimited JSON execution adapter (protocol v1).
 *
 * stdin:  one request object per line:
 *         {"v":1,"id":N,"dialect":"tsq","program":"<qir-txt>","shots":S,
 *          "seed":K,"pipeline_hint":L}
 * stdout: a hello object on startup, then one response per request, in
 *         request order:
 *         {"v":1,"id":N,"status":"ok","counts":{...}}
 *         {"v":1,"id":N,"status":"error","error":{"type":T,"message":M}}
 *
 * Every failure becomes an error response; the process itself never exits
 * on a bad request. The host (the fuzzing harness) owns timeouts and
 * crash-signature comparison.
 */
import * as readline from 'node:readline';
import { CAPABILITIES } from './ir.js';
import { ExecutionError, runProgram } from './interpreter.js';
import { parseProgram, ParseError } from './parser.js';
import { optimize } from './passes.js';

interface Request {
  v?: number;
  id?: unknown;
  dialect?: string;
  program?: string;
  shots?: number;
  seed?: number;
  pipeline_hint?: number;
}

function respond(obj: unknown): void {
  process.stdout.write(JSON.stringify(obj) + '\n');
}

function errorResponse(id: unknown, type: string, message: string): void {
  respond({ v: 1, id: id ?? null, status: 'error', error: { type, message } });
}

export function handleLine(line: string): void {
  let req: Request;
  try {
    req = JSON.parse(line);
  } catch (exc) {
    errorResponse(null, 'protocol', `malformed request line: ${(exc as Error).message}`);
    return;
  }
  const id = req.id ?? null;
  try {
    if (req.dialect !== undefined && req.dialect !== 'tsq') {
      errorResponse(id, 'protocol', `unsupported dialect '${req.dialect}'`);
      return;
    }
    if (typeof req.program !== 'string') {
      errorResponse(id, 'protocol', 'request lacks a program');
      return;
    }
    const shots = req.shots ?? 1024;
    if (!Number.isInteger(shots) || shots < 0 || shots > 1_000_000) {
      errorResponse(id, 'protocol', `bad shot count ${req.shots}`);
      return;
    }
    const program = optimize(parseProgram(req.program), req.pipeline_hint ?? 0);
    const result = runProgram(program, shots, req.seed ?? 0);
    const counts: Record<string, number> = {};
    for (const key of [...result.counts.keys()].sort()) {
      counts[key] = result.counts.get(key)!;
    }
    respond({ v: 1, id, status: 'ok', counts });
  } catch (exc) {
    if (exc instanceof ParseError) {
      errorResponse(id, 'parse', exc.message);
    } else if (exc instanceof ExecutionError) {
      errorResponse(id, exc.type, exc.message);
    } else {
      errorResponse(id, 'internal', `${(exc as Error).name}: ${(exc as Error).message}`);
    }
  }
}

export function main(): void {
  respond({ v: 1, type: 'hello', dialect: 'tsq', capabilities: [...CAPABILITIES] });
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    if (line.trim().length > 0) handleLine(line);
  });
}

const isMain = process.argv[1]?.endsWith('adapter.js');
if (isMain) main();
