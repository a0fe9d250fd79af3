// Run Universal Ctags over Python files and print one JSON object per tag.
// Paths must be relative to the current directory (the emscripten build
// mounts the host filesystem and resolves relative names only).
'use strict';
const ctags = require('universal-ctags');

const files = process.argv.slice(2);
const m = ctags.ctags(['-f', '-', '--excmd=number', '--fields=K',
  '--language-force=Python', '--sort=no'].concat(files));
if (m.exitStatus !== 0) {
  process.stderr.write(String(m.errorStream) + '\n');
  process.exit(2);
}
for (const line of (m.outputStream || '').split('\n')) {
  if (!line) continue;
  const f = line.split('\t');
  process.stdout.write(JSON.stringify({
    path: f[1], name: f[0], line: parseInt(f[2], 10), kind: f[f.length - 1],
  }) + '\n');
}
