"""Assemble the bundled reference SMILES sample from ring scaffolds,
substituents and linkers. Deterministic for a fixed seed."""

import random
import sys

SEED = 20190926
COUNT = 1000

SCAFFOLDS = [
    "{A}c1ccc({B})cc1", "{A}c1cccc({B})c1", "{A}c1ccccc1{B}", "{A}c1ccc({B})c({C})c1",
    "{A}c1ccc({B})nc1", "{A}c1ccncc1", "{A}c1cccc({B})n1", "{A}c1ncc({B})cn1",
    "{A}c1nccc({B})n1", "{A}c1ccc({B})s1", "{A}c1ccsc1", "{A}c1ccc({B})o1",
    "{A}c1nccs1", "{A}c1ncc({B})s1", "{A}c1ccc2ccccc2c1", "{A}c1cc2ccccc2s1",
    "{A}c1ccc2ncccc2c1", "{A}c1ccc2OCOc2c1", "{A}C1CCC({B})CC1", "{A}N1CCC({B})CC1",
    "{A}N1CCN({B})CC1", "{A}N1CCOCC1", "{A}N1CCC({B})C1", "{A}C1CCCC1",
    "{A}C1CCCO1", "{A}N1CCCC1=O", "{A}C1CC(=O)NC1", "{A}C1=CC(=O)C=CC1=O",
    "{A}c1ccc({B})cc1F", "{A}c1cc(F)cc({B})c1",
]
SEVEN = ["{A}N1CCCCCC1", "{A}C1CCCCCC1", "{A}C1CCN({B})CCC1", "{A}N1CCCCCC1=O"]

PREFIX = [
    "C", "CC", "CCC", "CC(C)", "CO", "OC", "O", "N", "F", "N#C", "OC(=O)", "FC(F)(F)",
    "NC(=O)", "CC(=O)N", "CS", "CCOC(=O)", "CN(C)", "CCN(CC)C", "OCC", "CC(=O)",
    "CSC", "COC(=O)", "NCC", "C=CC", "CC#C", "COCC", "OCCN", "CNC(=O)",
]
BRANCH = [
    "C", "O", "N", "F", "OC", "C#N", "C(=O)O", "C(F)(F)F", "C(=O)N", "NC(=O)C", "SC",
    "C(=O)OCC", "N(C)C", "CC", "C(C)C", "CO", "OCC", "C(=O)C", "CCO", "CN", "F", "C=O",
]
RINGS = ["c2ccccc2", "c2ccncc2", "C2CCCCC2", "c2ccsc2", "c2ccoc2", "c2ccc(F)cc2", "C2CCOCC2", "c2cccnc2"]
LINKERS = ["", "C", "O", "N", "C(=O)N", "NC(=O)", "S", "CC", "OC", "CO", "NC", "C(=O)"]
PHOSPHORUS = ["COP(OC)OC", "CCP(CC)CC", "OP(O)c1ccccc1", "CP(C)c1ccccc1", "COP(OC)c1ccc(C)cc1"]
UNSUPPORTED = [
    "C[N+](C)(C)C", "CC(=O)[O-]", "c1cc[nH]c1", "ClCCCl", "CCBr", "[Na+].[Cl-]",
    "C[S+](C)C", "OC(=O)C[NH3+]", "c1ccc2[nH]ccc2c1", "BrC1CCCCC1",
]


def fill(template, rng):
    out = template
    if "{A}" in out:
        if rng.random() < 0.45:
            prefix = rng.choice(RINGS) + rng.choice(LINKERS)
        else:
            prefix = rng.choice(PREFIX) if rng.random() < 0.85 else ""
        out = out.replace("{A}", prefix)
    for slot in ("{B}", "{C}"):
        if slot in out:
            sub = rng.choice(BRANCH) if rng.random() < 0.7 else ""
            out = out.replace(slot, sub)
    return out.replace("()", "")


def main():
    rng = random.Random(SEED)
    seen = set()
    lines = []
    n_seven = 40
    n_phosphorus = len(PHOSPHORUS)
    target = COUNT - len(UNSUPPORTED) - n_phosphorus
    while len(lines) < target:
        pool = SEVEN if len(lines) < n_seven else SCAFFOLDS
        smi = fill(rng.choice(pool), rng)
        if smi in seen or len(smi) < 6:
            continue
        seen.add(smi)
        lines.append(smi)
    lines.extend(PHOSPHORUS)
    lines.extend(UNSUPPORTED)
    rng.shuffle(lines)
    out = sys.stdout
    out.write("# neutral organic reference sample, one SMILES per line\n")
    for s in lines:
        out.write(s + "\n")


if __name__ == "__main__":
    main()
