#!/usr/bin/env python3
"""Convert an unpacked ZJU-GaitAcc tree to the canonical gait CSV and an annotation CSV.

Best-effort example. Expected layout (as distributed):

    <root>/session_1/subj_001/rec_1/3.txt       accelerometer of one sensor
    <root>/session_1/subj_001/rec_1/useful.txt  "start,end" of the walking segment
    <root>/session_1/subj_001/rec_1/cycles.txt  cycle boundary sample indices

Sensor files hold either three comma-separated rows (x, y, z) or one x,y,z row per sample.
Data is already at 100 Hz, so t = index / 100. Only the useful segment is exported and the
cycle boundaries are shifted to it. Sensor 3 is the right side of the pelvis.
"""

import argparse
import csv
import pathlib
import re
import sys


def numbers(path):
    rows = []
    for line in path.read_text().split("\n"):
        line = line.strip()
        if line:
            rows.append([float(v) for v in re.split(r"[,\s]+", line) if v])
    return rows


def read_axes(path):
    rows = numbers(path)
    if len(rows) == 3 and len(rows[0]) > 3:
        return list(zip(*rows))
    if all(len(r) == 3 for r in rows):
        return [tuple(r) for r in rows]
    raise ValueError(f"{path}: unrecognised sensor layout")


def trailing_int(name):
    m = re.search(r"(\d+)$", name)
    if not m:
        raise ValueError(f"no numeric suffix in '{name}'")
    return int(m.group(1))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("root", type=pathlib.Path)
    ap.add_argument("--sensor", type=int, default=3)
    ap.add_argument("--sessions", default="1,2", help="comma-separated session numbers to export")
    ap.add_argument("--out", type=pathlib.Path, required=True, help="canonical gait CSV")
    ap.add_argument("--annotations", type=pathlib.Path, required=True, help="cycle annotation CSV")
    args = ap.parse_args()

    wanted = {int(s) for s in args.sessions.split(",")}
    recordings = []
    for session_dir in sorted(args.root.glob("session_*")):
        session = trailing_int(session_dir.name)
        if session not in wanted:
            continue
        for subj_dir in sorted(session_dir.glob("subj_*")):
            for rec_dir in sorted(subj_dir.glob("rec_*")):
                recordings.append((trailing_int(subj_dir.name), session, trailing_int(rec_dir.name), rec_dir))
    if not recordings:
        sys.exit(f"no recordings found under {args.root}")
    recordings.sort(key=lambda r: r[:3])

    with args.out.open("w", newline="") as data, args.annotations.open("w", newline="") as ann:
        data_w = csv.writer(data, lineterminator="\n")
        ann_w = csv.writer(ann, lineterminator="\n")
        data_w.writerow(["subject", "session", "recording", "t", "ax", "ay", "az"])
        ann_w.writerow(["subject", "session", "recording", "boundaries"])
        for subject, session, recording, rec_dir in recordings:
            axes = read_axes(rec_dir / f"{args.sensor}.txt")
            start, end = 0, len(axes)
            useful = rec_dir / "useful.txt"
            if useful.exists():
                start, end = (int(v) for v in numbers(useful)[0][:2])
                end = min(end, len(axes))
            ids = (f"{subject:03d}", str(session), str(recording))
            for i in range(start, end):
                data_w.writerow([*ids, f"{(i - start) / 100:.2f}", *axes[i]])
            cycles = rec_dir / "cycles.txt"
            if cycles.exists():
                bounds = sorted({int(v) - start for row in numbers(cycles) for v in row if start <= v < end})
                if len(bounds) >= 2:
                    ann_w.writerow([*ids, " ".join(map(str, bounds))])
    print(f"wrote {args.out} and {args.annotations}: {len(recordings)} recordings")


if __name__ == "__main__":
    main()
