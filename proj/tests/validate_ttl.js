// Third-party Turtle validation for emitted corpora. Uses the n3 parser
// (npm install -g n3). Exit codes: 0 parsed, 1 parse failure, 3 n3 missing.
const fs = require('fs');

let N3;
try {
  N3 = require('n3');
} catch (e) {
  try {
    N3 = require('/usr/lib/node_modules/n3');
  } catch (e2) {
    console.error('n3 parser not installed; run: npm install -g n3');
    process.exit(3);
  }
}

if (process.argv.length < 3) {
  console.error('usage: node validate_ttl.js <file.ttl>');
  process.exit(2);
}

const text = fs.readFileSync(process.argv[2], 'utf8');
const parser = new N3.Parser({ format: 'text/turtle' });
let quads;
try {
  quads = parser.parse(text);
} catch (e) {
  console.error('turtle parse error: ' + e.message);
  process.exit(1);
}
console.log('parsed ' + quads.length + ' triples');
process.exit(quads.length > 0 ? 0 : 1);
