"""Write the small JSON-lines revision history used by the tests."""

import json
import random
import sys


def main(path):
    rng = random.Random(20171001)
    words = "kedi köpek la maison ville histoire kernel patch düzenleme encyclopédie".split()
    records = []
    ts = 1_000_000

    def add(article, user, text):
        nonlocal ts
        ts += rng.randint(1, 500)
        records.append({"article": article, "rev_id": str(len(records) + 1),
                        "user": user, "ts": ts, "text": text})

    # long article: exercises the 10-revision horizon, a vandal and a revert
    text = "Istanbul est une ville."
    add("Istanbul", "Ayse", text)
    users = ["Bernard", "85.100.2.7", "Claire", "Ayse", "Deniz", "Bernard", "Emre",
             "Claire", "Ayse", "Deniz", "Emre", "Bernard", "Claire"]
    for n, user in enumerate(users):
        if user == "85.100.2.7":
            vandal_base = text
            text = "LOL " + text[: len(text) // 2]
        elif n == 2:
            text = vandal_base  # revert
        else:
            text = text + " " + " ".join(rng.choice(words) for _ in range(rng.randint(1, 4)))
        add("Istanbul", user, text)

    # consecutive edits by the same user, a null edit and interleaving
    add("Linux", "Linus", "init")
    add("Ankara", "Deniz", "Ankara başkent.")
    add("Linux", "Linus", "init\nsched")
    add("Linux", "Greg", "init\nsched\ndrivers")
    add("Ankara", "Emre", "Ankara başkenttir.")
    add("Linux", "Alan", "init\nsched\ndrivers")  # null edit
    add("Linux", "Greg", "init\nsched\ndrivers\nnet")
    add("Ankara", "Deniz", "Ankara.")
    add("Solo", "Ayse", "a")
    add("Solo", "Ayse", "ab")

    rng.shuffle(records)  # ingestion must not rely on file order
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/revisions.jsonl")
