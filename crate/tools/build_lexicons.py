#!/usr/bin/env python3
"""Rebuild the word-list assets under crates/core/assets/.

Inputs are the unpacked contents of these PyPI distributions:

    cmudict        -> cmudict/data/cmudict.dict            (BSD-2, CMU)
    textstat       -> textstat/resources/en/easy_words.txt (MIT)
    vaderSentiment -> vaderSentiment/vader_lexicon.txt     (MIT)
    scikit-learn   -> sklearn.feature_extraction.text.ENGLISH_STOP_WORDS (BSD-3)

Usage:
    python3 tools/build_lexicons.py --src /path/to/unpacked --out crates/core/assets
"""

import argparse
import os
import re


def build_dictionary(src, out):
    words = set()
    with open(os.path.join(src, "cmudict/data/cmudict.dict"), encoding="utf-8") as f:
        for line in f:
            head = line.split(" ", 1)[0]
            head = re.sub(r"\(\d+\)$", "", head).lower()
            if re.fullmatch(r"[a-z]+(?:'[a-z]+)?", head):
                words.add(head)
    with open(os.path.join(out, "dictionary.txt"), "w", encoding="utf-8") as f:
        f.write("# English word list, one lowercase entry per line (source: CMU Pronouncing Dictionary)\n")
        for w in sorted(words):
            f.write(w + "\n")
    return len(words)


def build_dale_chall(src, out):
    with open(os.path.join(src, "textstat/resources/en/easy_words.txt"), encoding="utf-8") as f:
        words = sorted({w.strip().lower() for w in f if w.strip()})
    with open(os.path.join(out, "dale_chall.txt"), "w", encoding="utf-8") as f:
        f.write("# Dale-Chall familiar words, one per line (source: textstat)\n")
        for w in words:
            f.write(w + "\n")
    return len(words)


def build_stopwords(out):
    from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

    words = sorted(ENGLISH_STOP_WORDS)
    with open(os.path.join(out, "stopwords.txt"), "w", encoding="utf-8") as f:
        f.write("# English stop words, one per line (source: scikit-learn)\n")
        for w in words:
            f.write(w + "\n")
    return len(words)


def build_sentiment(src, out):
    rows = []
    with open(os.path.join(src, "vaderSentiment/vader_lexicon.txt"), encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 2:
                continue
            token, valence = parts[0], parts[1]
            if re.fullmatch(r"[a-z]+(?:[-'][a-z]+)*", token):
                rows.append((token, float(valence)))
    with open(os.path.join(out, "sentiment.tsv"), "w", encoding="utf-8") as f:
        f.write("# word<TAB>mean valence in [-4, 4] (source: VADER lexicon)\n")
        for token, valence in sorted(rows):
            f.write(f"{token}\t{valence}\n")
    return len(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--src", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    print("dictionary", build_dictionary(args.src, args.out))
    print("dale_chall", build_dale_chall(args.src, args.out))
    print("stopwords", build_stopwords(args.out))
    print("sentiment", build_sentiment(args.src, args.out))


if __name__ == "__main__":
    main()
