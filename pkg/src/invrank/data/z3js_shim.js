// Pipe an SMT-LIB2 script from stdin through the z3-solver WASM build.
// Usage: node z3js_shim.js   (extra args are ignored for z3 CLI compatibility)
const { init } = require('z3-solver');

let data = '';
process.stdin.setEncoding('utf8');
process.stdin.on('data', (chunk) => { data += chunk; });
process.stdin.on('end', async () => {
  try {
    const { Z3, em } = await init();
    const cfg = Z3.mk_config();
    const ctx = Z3.mk_context(cfg);
    const out = await Z3.eval_smtlib2_string(ctx, data);
    process.stdout.write(out.endsWith('\n') ? out : out + '\n');
    em.PThread.terminateAllThreads();
    process.exit(0);
  } catch (err) {
    process.stdout.write(`(error "${String(err).replace(/"/g, "'")}")\n`);
    process.exit(1);
  }
});
