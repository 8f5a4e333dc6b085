#!/usr/bin/env python3
"""Reference semantic-affinity computation for a dataset plus imported vectors.

Direct loops, standard library only. Usage:

    oracle_sa.py DATASET_ID DATASET_DIR EMBEDDING_DIR LANG [LANG ...]

Reads DATASET_DIR/<id>-<lang>.txt and EMBEDDING_DIR/<id>-<lang>.tsv and
prints the four spreads and both SA values as JSON.
"""

import itertools
import json
import math
import sys


def read_cells(path):
    with open(path, encoding="utf-8") as f:
        lines = [l.strip() for l in f if l.strip()]
    return [[w.strip() for w in l.split("|") if w.strip()] for l in lines]


def read_vectors(path):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, values = line.split("\t")
            out[word] = [float(x) for x in values.split(",")]
    return out


def cos_d(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return 1.0 - dot / (na * nb)


def euc_d(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def main(argv):
    dataset, data_dir, emb_dir, langs = argv[1], argv[2], argv[3], argv[4:]
    cells = {l: read_cells(f"{data_dir}/{dataset}-{l}.txt") for l in langs}
    vecs = {l: read_vectors(f"{emb_dir}/{dataset}-{l}.tsv") for l in langs}
    m = len(cells[langs[0]])

    intra_cos = intra_euc = 0.0
    for l in langs:
        vocab = []
        for cell in cells[l]:
            for w in cell:
                if w not in vocab:
                    vocab.append(w)
        pairs = list(itertools.combinations(vocab, 2))
        intra_cos += sum(cos_d(vecs[l][a], vecs[l][b]) for a, b in pairs) / len(pairs)
        intra_euc += math.sqrt(sum(euc_d(vecs[l][a], vecs[l][b]) ** 2 for a, b in pairs) / len(pairs))
    intra_cos /= len(langs)
    intra_euc /= len(langs)

    inter_cos = inter_euc = 0.0
    units = 0
    for c in range(m):
        for combo in itertools.product(*[cells[l][c] for l in langs]):
            words = list(zip(langs, combo))
            pairs = list(itertools.combinations(words, 2))
            inter_cos += sum(cos_d(vecs[a][wa], vecs[b][wb]) for (a, wa), (b, wb) in pairs) / len(pairs)
            inter_euc += math.sqrt(
                sum(euc_d(vecs[a][wa], vecs[b][wb]) ** 2 for (a, wa), (b, wb) in pairs) / len(pairs)
            )
            units += 1
    inter_cos /= units
    inter_euc /= units

    print(json.dumps({
        "concepts": m,
        "expanded": units,
        "intra_cosine": intra_cos,
        "inter_cosine": inter_cos,
        "intra_euclidean": intra_euc,
        "inter_euclidean": inter_euc,
        "sa_cosine": intra_cos / (intra_cos + inter_cos),
        "sa_euclidean": intra_euc / (intra_euc + inter_euc),
    }, indent=2))


if __name__ == "__main__":
    main(sys.argv)
