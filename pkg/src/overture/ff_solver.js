#!/usr/bin/env node
// Finite-field SMT solver shim backed by Z3 (WASM build from npm z3-solver).
//
// Reads an SMT-LIB script using the finite-field theory:
//   (define-sort F () (_ FiniteField p))
//   (declare-const |name| F)
//   (assert (= (ff.add a b) (as ff3 F))) ...
//   (check-sat) (get-model)
// and answers with "sat" | "unsat" | "unknown" on the first line, followed
// by "name = value" lines for sat verdicts.
//
// Field elements are encoded as Z3 integers x with 0 <= x < p; a field
// equality a == b becomes (a - b) mod p == 0. The input language has no
// division and p is prime, so the encoding is exact.
//
// Modes:
//   node ff_solver.js            one query on stdin, answer on stdout
//   node ff_solver.js --serve    loop: script terminated by a line
//                                "(exit-query)", answer terminated by "==="

'use strict';

const { init } = require('z3-solver');

// --- s-expression reader -------------------------------------------------

function tokenizeSexpr(src) {
  const toks = [];
  let i = 0;
  while (i < src.length) {
    const c = src[i];
    if (c === ';') { while (i < src.length && src[i] !== '\n') i++; continue; }
    if (/\s/.test(c)) { i++; continue; }
    if (c === '(' || c === ')') { toks.push(c); i++; continue; }
    if (c === '|') {
      const j = src.indexOf('|', i + 1);
      if (j < 0) throw new Error('unterminated |symbol|');
      toks.push(src.slice(i, j + 1));
      i = j + 1;
      continue;
    }
    let j = i;
    while (j < src.length && !/[\s()|;]/.test(src[j])) j++;
    toks.push(src.slice(i, j));
    i = j;
  }
  return toks;
}

function parseSexprs(src) {
  const toks = tokenizeSexpr(src);
  let pos = 0;
  function one() {
    const t = toks[pos++];
    if (t === '(') {
      const items = [];
      while (toks[pos] !== ')') {
        if (pos >= toks.length) throw new Error('unbalanced parens');
        items.push(one());
      }
      pos++;
      return items;
    }
    if (t === ')') throw new Error('unexpected )');
    return t;
  }
  const out = [];
  while (pos < toks.length) out.push(one());
  return out;
}

// --- query evaluation ----------------------------------------------------

async function runQuery(Z3, script) {
  let p = null;
  const consts = new Map();
  const asserts = [];
  let wantModel = false;

  let forms;
  try {
    forms = parseSexprs(script);
  } catch (e) {
    return ['unknown parse-error: ' + e.message];
  }

  const P = () => Z3.Int.val(p);

  function term(sx) {
    if (typeof sx === 'string') {
      const name = sx.replace(/^\|(.*)\|$/, '$1');
      if (consts.has(name)) return consts.get(name);
      const m = /^ff(\d+)$/.exec(sx);
      if (m) return Z3.Int.val(BigInt(m[1]) % p);
      throw new Error('unknown symbol ' + sx);
    }
    const head = sx[0];
    if (head === 'as') return term(sx[1]); // (as ffN F)
    if (head === 'ff.add') return sx.slice(1).map(term).reduce((a, b) => a.add(b));
    if (head === 'ff.mul') return sx.slice(1).map(term).reduce((a, b) => a.mul(b));
    if (head === 'ff.neg') return Z3.Int.val(0).sub(term(sx[1]));
    throw new Error('unknown term head ' + JSON.stringify(head));
  }

  function formula(sx) {
    const head = sx[0];
    if (head === '=') return Z3.Int.val(0).eq(term(sx[1]).sub(term(sx[2])).mod(P()));
    if (head === 'and') return Z3.And(...sx.slice(1).map(formula));
    if (head === 'or') return Z3.Or(...sx.slice(1).map(formula));
    if (head === 'not') return Z3.Not(formula(sx[1]));
    throw new Error('unknown formula head ' + JSON.stringify(head));
  }

  const solver = new Z3.Solver();
  try {
    for (const form of forms) {
      const head = form[0];
      if (head === 'set-logic' || head === 'set-option' || head === 'set-info') continue;
      if (head === 'define-sort') {
        // (define-sort F () (_ FiniteField p))
        p = BigInt(form[3][2]);
        continue;
      }
      if (head === 'declare-const' || head === 'declare-fun') {
        const name = String(form[1]).replace(/^\|(.*)\|$/, '$1');
        const v = Z3.Int.const(name);
        consts.set(name, v);
        solver.add(v.ge(0), v.lt(P()));
        continue;
      }
      if (head === 'assert') {
        solver.add(formula(form[1]));
        continue;
      }
      if (head === 'check-sat') continue; // checked below
      if (head === 'get-model') { wantModel = true; continue; }
      if (head === 'exit') continue;
      throw new Error('unknown command ' + JSON.stringify(head));
    }
    if (p === null) throw new Error('no field sort defined');
  } catch (e) {
    return ['unknown ' + e.message];
  }

  const verdict = await solver.check();
  const lines = [String(verdict)];
  if (String(verdict) === 'sat' && wantModel) {
    const model = solver.model();
    for (const [name, v] of consts) {
      const val = model.eval(v, true);
      lines.push(`|${name}| = ${val.toString()}`);
    }
  }
  return lines;
}

// --- entry points --------------------------------------------------------

async function main() {
  const { Context } = await init();
  const Z3 = Context('main');
  const serve = process.argv.includes('--serve');

  if (!serve) {
    const chunks = [];
    for await (const chunk of process.stdin) chunks.push(chunk);
    const lines = await runQuery(Z3, chunks.join(''));
    process.stdout.write(lines.join('\n') + '\n');
    process.exit(0);
  }

  let buf = [];
  const readline = require('readline');
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of rl) {
    if (line.trim() === '(exit-query)') {
      const lines = await runQuery(Z3, buf.join('\n'));
      buf = [];
      process.stdout.write(lines.join('\n') + '\n===\n');
    } else {
      buf.push(line);
    }
  }
  process.exit(0);
}

main().catch((e) => {
  process.stdout.write('unknown ' + e.message + '\n');
  process.exit(3);
});
