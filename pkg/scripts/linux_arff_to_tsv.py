"""Convert the public Linux patch ARFF file into an observation TSV.

Column names in the upstream file are not fixed, so each role is a flag.
Rows with an empty developer or subsystem name are dropped, then every
subsystem without a single accepted patch.  Output rows are in
chronological order, ready for ``editoutcome train --split-fraction 0.8``.

Example::

    python3 scripts/linux_arff_to_tsv.py patches.arff linux.tsv \\
        --user-col developer --item-col subsystem --label-col accepted \\
        --ts-col date --accepted-values 1 true yes
"""

import argparse
import csv
import sys
from collections import Counter

from editoutcome.dataset import write_observations


def read_arff(lines):
    """Attribute names and data rows of an ARFF file (dense rows only)."""
    names, rows, in_data = [], [], False
    data_lines = []
    for line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        low = stripped.lower()
        if in_data:
            data_lines.append(stripped)
        elif low.startswith("@attribute"):
            rest = stripped[len("@attribute"):].strip()
            if rest[0] in "'\"":
                end = rest.index(rest[0], 1)
                names.append(rest[1:end])
            else:
                names.append(rest.split()[0])
        elif low.startswith("@data"):
            in_data = True
    for row in csv.reader(data_lines, quotechar="'", skipinitialspace=True):
        if row and row[0].startswith("{"):
            raise ValueError("sparse ARFF rows are not supported")
        rows.append([c.strip().strip('"') for c in row])
    return names, rows


def convert(names, rows, user_col, item_col, label_col, ts_col, accepted_values):
    try:
        cu, ci, cl, ct = (names.index(c) for c in (user_col, item_col, label_col, ts_col))
    except ValueError as exc:
        raise SystemExit(f"column not found ({exc}); available: {', '.join(names)}")
    accepted = {v.lower() for v in accepted_values}
    records = []
    for row in rows:
        user, item = row[cu], row[ci]
        if not user or user == "?" or not item or item == "?":
            continue
        q = 1.0 if row[cl].lower() in accepted else 0.0
        records.append((user, item, q, int(float(row[ct]))))
    good = Counter(item for _, item, q, _ in records if q == 1.0)
    kept = [r for r in records if good[r[1]] > 0]
    kept.sort(key=lambda r: r[3])
    return kept, len(records) - len(kept)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("arff")
    ap.add_argument("output")
    ap.add_argument("--user-col", required=True)
    ap.add_argument("--item-col", required=True)
    ap.add_argument("--label-col", required=True)
    ap.add_argument("--ts-col", required=True, help="numeric submission time")
    ap.add_argument("--accepted-values", nargs="+", default=["1", "true", "yes", "accepted"])
    args = ap.parse_args()

    with open(args.arff, encoding="utf-8", errors="replace") as fh:
        names, rows = read_arff(fh)
    kept, dropped = convert(names, rows, args.user_col, args.item_col, args.label_col,
                            args.ts_col, args.accepted_values)
    n = write_observations(args.output, kept)
    rate = sum(r[2] for r in kept) / max(n, 1)
    print(f"read {len(rows)} rows, wrote {n}, dropped {dropped} in never-accepted subsystems, "
          f"acceptance rate {rate:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
