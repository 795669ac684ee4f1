#!/usr/bin/env python3
"""Convert the WSJ-trained averaged-perceptron weights shipped in the
`textblob-aptagger` wheel (trontagger-0.1.0.pickle, MIT, M. Honnibal) into the
crate's text model format.

Usage:
    python3 tools/convert_tagger.py --pickle trontagger-0.1.0.pickle \
        --out crates/core/assets/tagger.model [--min-weight 0.0]
"""

import argparse
import pickle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pickle", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--min-weight", type=float, default=0.0)
    args = ap.parse_args()

    with open(args.pickle, "rb") as f:
        weights, tagdict, classes = pickle.load(f, encoding="latin-1")
    classes = sorted(classes)
    index = {c: i for i, c in enumerate(classes)}
    kept = 0
    with open(args.out, "w", encoding="utf-8") as out:
        out.write("# Averaged perceptron POS tagger, Penn Treebank tagset\n")
        out.write("# Weights: textblob-aptagger trontagger-0.1.0 (MIT, Matthew Honnibal), WSJ-trained\n")
        out.write("classes\t" + " ".join(classes) + "\n")
        for word in sorted(tagdict):
            if "\t" in word or "\n" in word or not word:
                continue
            out.write(f"d\t{word}\t{tagdict[word]}\n")
        for feat in sorted(weights):
            if "\t" in feat or "\n" in feat:
                continue
            entries = [
                (index[label], w)
                for label, w in sorted(weights[feat].items(), key=lambda kv: index[kv[0]])
                if abs(w) > args.min_weight
            ]
            if not entries:
                continue
            cells = " ".join(f"{i}:{w:.3f}".rstrip("0").rstrip(".") for i, w in entries)
            out.write(f"w\t{feat}\t{cells}\n")
            kept += 1
    print("classes", len(classes), "tagdict", len(tagdict), "features", kept)


if __name__ == "__main__":
    main()
