"""Regenerate the golden quality TSV from the test oracle (not the library)."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from tests.oracles import quality_pipeline  # noqa: E402


def main(src, dst, cutoff=None):
    with open(src, encoding="utf-8") as fh:
        rows = quality_pipeline(fh, cutoff)
    with open(dst, "w", encoding="utf-8") as fh:
        fh.write("user\titem\tq\tts\n")
        for user, item, q, ts in rows:
            fh.write(f"{user}\t{item}\t{q:.10g}\t{ts}\n")


if __name__ == "__main__":
    main(*sys.argv[1:3], *(int(x) for x in sys.argv[3:4]))
