"""Download an annual series and save it in the format ``bayesmono test`` reads.

    python scripts/fetch_series.py URL OUT.csv [--year-col 0] [--value-col 1]

The source is expected to be plain text with whitespace- or comma-separated
columns; lines that do not start with a number are skipped. No URL is built
in: pass the address of the series you want to test.
"""

import argparse
import re
import sys
import urllib.request

NUMBER = re.compile(r"^\s*-?\d")


def convert(text: str, year_col: int, value_col: int) -> list[str]:
    rows = []
    for line in text.splitlines():
        if not NUMBER.match(line):
            continue
        fields = re.split(r"[,\s]+", line.strip())
        rows.append(f"{fields[year_col]},{fields[value_col]}")
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("url")
    p.add_argument("out")
    p.add_argument("--year-col", type=int, default=0)
    p.add_argument("--value-col", type=int, default=1)
    args = p.parse_args(argv)
    with urllib.request.urlopen(args.url, timeout=60) as resp:
        text = resp.read().decode("utf-8", errors="replace")
    rows = convert(text, args.year_col, args.value_col)
    if len(rows) < 2:
        print("fetch_series: fewer than 2 numeric rows found", file=sys.stderr)
        return 1
    with open(args.out, "w") as fh:
        fh.write(f"# source: {args.url}\n")
        fh.write("\n".join(rows) + "\n")
    print(f"{len(rows)} rows -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
