"""One-time converter for the public NBA Twitter benchmark.

The upstream distribution ships two files:

  nba.csv              per-player rows; first column is the user id,
                       `country` is the sensitive attribute (0/1),
                       `SALARY` is the label (-1 unknown, 0/1 known)
  nba_relationship.txt one "src dst" pair per line (Twitter follower links)

This script rewrites them into the directory layout the library loads
(`nodes.csv` with node_id / feature columns / sensitive / label, plus
`edges.csv`), so the real benchmark can be used via
`fairac run <out_dir>` once the raw files have been downloaded.

Usage:
    python3 scripts/convert_nba.py nba.csv nba_relationship.txt out_dir
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

SENSITIVE_RAW = "country"
LABEL_RAW = "SALARY"
ID_COLUMN_INDEX = 0


def convert(node_csv: Path, edge_txt: Path, out_dir: Path) -> None:
    with open(node_csv, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    if SENSITIVE_RAW not in header or LABEL_RAW not in header:
        sys.exit(f"expected columns {SENSITIVE_RAW!r} and {LABEL_RAW!r} "
                 f"in {node_csv}")
    s_idx = header.index(SENSITIVE_RAW)
    y_idx = header.index(LABEL_RAW)
    feat_idx = [i for i in range(len(header))
                if i not in (ID_COLUMN_INDEX, s_idx, y_idx)]

    raw_ids = [r[ID_COLUMN_INDEX] for r in rows]
    if len(set(raw_ids)) != len(raw_ids):
        sys.exit(f"duplicate ids in {node_csv}")
    id_map = {rid: i for i, rid in enumerate(raw_ids)}

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "nodes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node_id"] + [header[i] for i in feat_idx]
                   + ["sensitive", "label"])
        for r in rows:
            label = int(float(r[y_idx]))
            # unknown salaries are marked -1 upstream; keep that convention,
            # the loader treats -1 as unlabeled
            w.writerow([id_map[r[ID_COLUMN_INDEX]]]
                       + [r[i] for i in feat_idx]
                       + [int(float(r[s_idx])), label])

    kept, dropped = 0, 0
    with open(edge_txt) as f, open(out_dir / "edges.csv", "w", newline="") as g:
        w = csv.writer(g)
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = parts
            if a in id_map and b in id_map:
                w.writerow([id_map[a], id_map[b]])
                kept += 1
            else:
                dropped += 1

    print(f"wrote {len(rows)} nodes and {kept} edges to {out_dir}"
          + (f" (dropped {dropped} edges with unknown endpoints)"
             if dropped else ""))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("node_csv", type=Path)
    p.add_argument("edge_txt", type=Path)
    p.add_argument("out_dir", type=Path)
    args = p.parse_args(argv)
    convert(args.node_csv, args.edge_txt, args.out_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
