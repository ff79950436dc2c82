// Regenerates tests/fixtures/*.hex and *.abi.json from tests/fixtures/sources.
// Usage: NODE_PATH=<dir with solc4/solc6/solc8 installed> node scripts/compile_fixtures.js
const fs = require("fs");
const path = require("path");

const compilers = { "0.4": require("solc4"), "0.6": require("solc6"), "0.8": require("solc8") };
const root = path.join(__dirname, "..", "tests", "fixtures");
const srcDir = path.join(root, "sources");

for (const file of fs.readdirSync(srcDir).filter((f) => f.endsWith(".sol")).sort()) {
  const source = fs.readFileSync(path.join(srcDir, file), "utf8");
  const pragma = source.match(/pragma solidity \^(0\.\d)/)[1];
  const solc = compilers[pragma];
  const input = {
    language: "Solidity",
    sources: { [file]: { content: source } },
    settings: { outputSelection: { "*": { "*": ["abi", "evm.deployedBytecode.object"] } } },
  };
  const compile = solc.compileStandardWrapper || solc.compile;
  const out = JSON.parse(compile(JSON.stringify(input)));
  for (const err of out.errors || []) {
    if (err.severity === "error") throw new Error(err.formattedMessage);
  }
  const main = path.basename(file, ".sol");
  const contract = out.contracts[file][main];
  fs.writeFileSync(path.join(root, main + ".hex"), contract.evm.deployedBytecode.object + "\n");
  fs.writeFileSync(path.join(root, main + ".abi.json"), JSON.stringify(contract.abi, null, 1) + "\n");
  console.log(main, solc.version(), contract.evm.deployedBytecode.object.length / 2, "bytes");
}
