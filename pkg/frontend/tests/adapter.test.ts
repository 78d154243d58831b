import { spawn, type ChildProcessWithoutNullStreams } from 'node:child_process';
import * as path from 'node:path';
import * as readline from 'node:readline';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { emitSource } from '../src/emit.js';
import { parseProgram } from '../src/parser.js';

const ADAPTER = path.resolve(__dirname, '../dist/adapter.js');

const BELL = `qir-txt 1
qreg q 2
creg c 2
meta n_qubits 2
h q[0]
cx q[0] q[1]
measure q[0] -> c[0]
measure q[1] -> c[1]
`;

class AdapterClient {
  proc: ChildProcessWithoutNullStreams;
  private lines: string[] = [];
  private waiters: Array<(line: string) => void> = [];

  constructor() {
    this.proc = spawn('node', [ADAPTER], { stdio: ['pipe', 'pipe', 'inherit'] });
    const rl = readline.createInterface({ input: this.proc.stdout });
    rl.on('line', (line) => {
      const waiter = this.waiters.shift();
      if (waiter) waiter(line);
      else this.lines.push(line);
    });
  }

  send(obj: unknown): void {
    this.proc.stdin.write(JSON.stringify(obj) + '\n');
  }

  sendRaw(line: string): void {
    this.proc.stdin.write(line + '\n');
  }

  read(): Promise<any> {
    if (this.lines.length > 0) {
      return Promise.resolve(JSON.parse(this.lines.shift()!));
    }
    return new Promise((resolve) => {
      this.waiters.push((line) => resolve(JSON.parse(line)));
    });
  }

  close(): void {
    this.proc.stdin.end();
    this.proc.kill();
  }
}

describe('adapter protocol', () => {
  let client: AdapterClient;

  beforeAll(async () => {
    client = new AdapterClient();
    const hello = await client.read();
    expect(hello.type).toBe('hello');
    expect(hello.v).toBe(1);
    expect(hello.capabilities).toContain('ctrl_on_int');
  });

  afterAll(() => client.close());

  it('runs a bell circuit with sane statistics', async () => {
    client.send({ v: 1, id: 1, dialect: 'tsq', program: BELL, shots: 4096, seed: 9 });
    const resp = await client.read();
    expect(resp.id).toBe(1);
    expect(resp.status).toBe('ok');
    const keys = Object.keys(resp.counts).sort();
    expect(keys).toEqual(['00', '11']);
    for (const key of keys) {
      expect(resp.counts[key]).toBeGreaterThan(1700);
      expect(resp.counts[key]).toBeLessThan(2400);
    }
  });

  it('answers pipelined requests in order', async () => {
    client.send({ v: 1, id: 10, program: BELL, shots: 50, seed: 1 });
    client.send({ v: 1, id: 11, program: BELL, shots: 50, seed: 2 });
    const first = await client.read();
    const second = await client.read();
    expect(first.id).toBe(10);
    expect(second.id).toBe(11);
  });

  it('reports parse failures as error responses', async () => {
    client.send({ v: 1, id: 2, program: 'qir-txt 1\nqreg q 1\nboom q[0]\n', shots: 10 });
    const resp = await client.read();
    expect(resp.status).toBe('error');
    expect(resp.error.type).toBe('parse');
  });

  it('reports malformed lines without dying', async () => {
    client.sendRaw('this is not json');
    const resp = await client.read();
    expect(resp.status).toBe('error');
    expect(resp.error.type).toBe('protocol');
    client.send({ v: 1, id: 3, program: BELL, shots: 16, seed: 0 });
    const next = await client.read();
    expect(next.id).toBe(3);
    expect(next.status).toBe('ok');
  });

  it('applies the optimization hint', async () => {
    const doubled =
      'qir-txt 1\nqreg q 1\ncreg c 1\nx q[0]\nx q[0]\nx q[0]\nmeasure q[0] -> c[0]\n';
    client.send({ v: 1, id: 4, program: doubled, shots: 32, seed: 0, pipeline_hint: 1 });
    const resp = await client.read();
    expect(resp.status).toBe('ok');
    expect(resp.counts).toEqual({ '1': 32 });
  });

  it('survives a mixed valid/invalid burst', async () => {
    const burst = 200;
    for (let i = 0; i < burst; i++) {
      if (i % 3 === 2) client.sendRaw('{"v":1,broken');
      else client.send({ v: 1, id: 100 + i, program: BELL, shots: 8, seed: i });
    }
    let okCount = 0;
    let errCount = 0;
    for (let i = 0; i < burst; i++) {
      const resp = await client.read();
      if (resp.status === 'ok') okCount += 1;
      else errCount += 1;
    }
    expect(okCount).toBe(Math.ceil((burst * 2) / 3));
    expect(errCount).toBe(burst - okCount);
    expect(client.proc.exitCode).toBeNull(); // still alive
  });
});

describe('emitted source', () => {
  it('round-trips through the runtime', async () => {
    const program = parseProgram(BELL);
    const source = emitSource(program, '../dist/index.js');
    const fs = await import('node:fs/promises');
    const os = await import('node:os');
    const dir = await fs.mkdtemp(path.join(os.tmpdir(), 'tsq-emit-'));
    const file = path.join(dir, 'emitted.mjs');
    // strip types so node can run the emitted module directly
    const js = source
      .replace(', type Program', '')
      .replace(': Program', '')
      .replace(`'../dist/index.js'`, JSON.stringify(path.resolve(__dirname, '../dist/index.js')));
    await fs.writeFile(file, js);
    const mod = await import(file);
    const result = mod.main(256, 3);
    const keys = [...result.counts.keys()].sort();
    expect(keys).toEqual(['00', '11']);
  });

  it('refuses constructs outside the dialect', () => {
    const withReset = parseProgram('qir-txt 1\nqreg q 1\ncreg c 1\nreset q[0]\n');
    expect(() => emitSource(withReset)).toThrowError(/not supported/);
  });

  it('renders measurement-conditioned branching with a dead then-branch', () => {
    const text = [
      'qir-txt 1',
      'qreg q 1',
      'qreg anc 1',
      'creg result 1',
      'creg g 1',
      'x anc[0]',
      'measure anc[0] -> g[0]',
      'if g == 0 {',
      '  x q[0]',
      '} else {',
      '  h q[0]',
      '}',
      'measure q[0] -> result[0]',
      '',
    ].join('\n');
    const source = emitSource(parseProgram(text));
    expect(source).toContain("kind: 'if'");
    expect(source).toContain('thenBody: [');
    expect(source).toContain('elseBody: [');
    expect(source).toContain("kind: 'measure'");
  });

  it('renders the zero-trip loop form', () => {
    const text = 'qir-txt 1\nqreg q 1\ncreg c 1\nfor 0 {\nx q[0]\n}\nmeasure q[0] -> c[0]\n';
    const source = emitSource(parseProgram(text));
    expect(source).toContain("kind: 'for', count: 0");
  });
});
