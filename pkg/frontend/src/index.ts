export { CAPABILITIES, outputWidth, outcomeKey, totalQubits } from './ir.js';
export type { Condition, Instruction, Program, QubitRef, Register } from './ir.js';
export { ParseError, parseProgram } from './parser.js';
export { DEFAULT_FUEL, ExecutionError, runProgram } from './interpreter.js';
export type { RunResult } from './interpreter.js';
export { optimize } from './passes.js';
export { UnsupportedConstruct, emitSource } from './emit.js';
export { StateVector, applyGate } from './state.js';
export { ShotRng, mix64 } from './rng.js';
