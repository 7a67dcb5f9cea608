#!/usr/bin/env python3
"""Convert an unpacked IDNet tree to the canonical gait CSV.

Best-effort example. Expected layout (as distributed):

    <root>/u001_w001/u001_w001_accelerometer.log

Each log is tab- or comma-separated with a header row and columns timestamp, x, y, z.
Timestamps are converted to seconds from the first sample; the unit (ns, us, ms or s) is
guessed from the median sample spacing. Sampling is irregular, which is fine: the toolkit
resamples every recording to 100 Hz. Each walk becomes one recording in session 1.
"""

import argparse
import csv
import pathlib
import re
import statistics
import sys

UNITS = [(1e9, 1e-9), (1e6, 1e-6), (1e3, 1e-3), (1.0, 1.0)]


def read_log(path):
    stamps, axes = [], []
    for line in path.read_text().splitlines():
        fields = [f for f in re.split(r"[,\t ]+", line.strip()) if f]
        try:
            values = [float(f) for f in fields[:4]]
        except ValueError:
            continue  # header
        if len(values) == 4:
            stamps.append(values[0])
            axes.append(values[1:])
    return stamps, axes


def to_seconds(stamps):
    step = statistics.median(b - a for a, b in zip(stamps, stamps[1:]))
    # 100 Hz means 0.01 s per sample; pick the unit that lands closest.
    scale = min(UNITS, key=lambda u: abs(step * u[1] - 0.01))[1]
    t0 = stamps[0]
    return [(s - t0) * scale for s in stamps]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("root", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, required=True)
    args = ap.parse_args()

    logs = sorted(args.root.glob("*/*_accelerometer.log"))
    if not logs:
        sys.exit(f"no *_accelerometer.log files under {args.root}")

    written = 0
    with args.out.open("w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["subject", "session", "recording", "t", "ax", "ay", "az"])
        for log in logs:
            m = re.match(r"u(\d+)_w(\d+)", log.parent.name)
            if not m:
                continue
            stamps, axes = read_log(log)
            if len(stamps) < 2:
                continue
            t = to_seconds(stamps)
            last = None
            for ti, a in zip(t, axes):
                if last is not None and ti <= last:
                    continue  # duplicate or out-of-order timestamps
                w.writerow([m.group(1), "1", m.group(2), repr(ti), *a])
                last = ti
            written += 1
    print(f"wrote {args.out}: {written} walks")


if __name__ == "__main__":
    main()
