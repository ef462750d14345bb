#!/usr/bin/env python3
"""Fetch the public UCI ElectricityLoadDiagrams20112014 dataset and convert
selected meters into one-year energy CSVs that meterfill can ingest.

The raw file holds quarter-hourly average power (kW) for 370 Portuguese
meters, semicolon-separated with comma decimals.  Power readings are
accumulated into cumulative energy (kWh) starting at zero.  Pick whichever
meters you like; there is no published canonical selection.

Usage:
    python scripts/fetch_uci.py --out-dir data/uci --year 2013 \
        --clients MT_124 MT_158 MT_200

Then, for example:
    METERFILL_UCI_DIR=data/uci pytest tests/test_acceptance.py -k real_data
"""

import argparse
import csv
import io
import sys
import urllib.request
import zipfile
from datetime import datetime
from pathlib import Path

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00321/LD2011_2014.txt.zip"
VALUES_PER_YEAR = 35040


def download(cache: Path) -> Path:
    if cache.exists():
        print(f"using cached {cache}")
        return cache
    print(f"downloading {URL} ...")
    cache.parent.mkdir(parents=True, exist_ok=True)
    urllib.request.urlretrieve(URL, cache)
    return cache


def convert(raw_zip: Path, out_dir: Path, clients: list[str], year: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(raw_zip) as archive:
        name = archive.namelist()[0]
        with archive.open(name) as handle:
            text = io.TextIOWrapper(handle, encoding="utf-8")
            reader = csv.reader(text, delimiter=";")
            header = next(reader)
            columns = {c: i for i, c in enumerate(header)}
            missing = [c for c in clients if c not in columns]
            if missing:
                sys.exit(f"unknown client ids: {missing}; available: {header[1:6]}...")
            rows = []
            for row in reader:
                stamp = datetime.fromisoformat(row[0])
                if stamp.year == year or (
                    stamp.year == year + 1 and stamp.month == 1 and stamp.day == 1
                    and stamp.hour == 0 and stamp.minute == 0
                ):
                    rows.append(row)
    for client in clients:
        col = columns[client]
        # Rows are interval-END stamped in the raw file; shift to interval
        # start and accumulate kW quarter-hours into kWh meter readings.
        powers = [float(r[col].replace(",", ".")) for r in rows[: VALUES_PER_YEAR + 1]]
        if len(powers) < VALUES_PER_YEAR:
            sys.exit(f"{client}: only {len(powers)} values in {year}")
        energy = 0.0
        out_path = out_dir / f"{client}_{year}.csv"
        with open(out_path, "w", encoding="utf-8") as f:
            f.write("timestamp,value\n")
            start = datetime.fromisoformat(rows[0][0])
            step = datetime.fromisoformat(rows[1][0]) - start
            stamp = start - step
            for p in powers[:VALUES_PER_YEAR]:
                f.write(f"{stamp.isoformat(sep=' ')},{energy!r}\n")
                energy += p * 0.25
                stamp += step
        print(f"wrote {out_path}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data/uci")
    parser.add_argument("--cache", default="data/raw/LD2011_2014.txt.zip")
    parser.add_argument("--year", type=int, default=2013)
    parser.add_argument("--clients", nargs="+", required=True,
                        help="meter column names, e.g. MT_124 MT_158")
    args = parser.parse_args()
    raw = download(Path(args.cache))
    convert(raw, Path(args.out_dir), args.clients, args.year)


if __name__ == "__main__":
    main()
