#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes a benchmark manifest whose per-configuration counts and average
lengths match the ROWS below. Durations spread symmetrically
around each average so the means come out exact; no media is referenced."""

import argparse
import json

ROWS = [
    # config, samples, avg music (s), avg source video (h)
    ("O-Sh-GP", 45, 27.9, 1.7),
    ("O-Me-GP", 35, 83.7, 3.1),
    ("O-Me-DP", 35, 83.7, 3.1),
    ("O-Lo-DP", 44, 154.2, 5.5),
    ("S-Me-GP", 37, 85.6, 2.9),
    ("S-Lo-GP", 45, 182.1, 5.2),
    ("S-Me-DP", 34, 85.1, 2.9),
    ("S-Lo-DP", 44, 179.8, 5.2),
]

# keeps every sample inside its length class
SPREAD = {"Sh": 1.5, "Me": 4.0, "Lo": 20.0}

THEMES = ["city lights", "ocean waves", "forest run", "desert race", "mountain climb", "harbor night"]
CAST = ["ava", "ben", "cara", "dev", "eli"]


def offsets(n, spread):
    if n == 1:
        return [0.0]
    half = (n - 1) / 2.0
    return [spread * (k - half) / half for k in range(n)]


def intent(config, k):
    family, _, prompt = config.split("-")
    theme = THEMES[k % len(THEMES)]
    who = CAST[k % len(CAST)]
    if family == "O":
        text = f"energetic {theme} montage cut on the beat"
    else:
        text = f"{who} journey through the {theme}"
    if prompt == "DP":
        text += f". segment 0: {who} arrives. segment 1: the chase. segment 2: {theme} finale"
    return text


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    args = ap.parse_args()
    lines = []
    for config, n, music, hours in ROWS:
        length = config.split("-")[1]
        for k, d in enumerate(offsets(n, SPREAD[length])):
            secs = hours * 3600.0 + 600.0 * (k - (n - 1) / 2.0) / max(1.0, (n - 1) / 2.0)
            parts = 3 + k % 3
            vids = [{"id": f"{config}-{k:02d}-v{j}", "duration": round(secs / parts, 6)} for j in range(parts)]
            # put the rounding remainder on the first video
            vids[0]["duration"] = round(secs - sum(v["duration"] for v in vids[1:]), 6)
            lines.append(
                {
                    "id": f"{config}-{k:02d}",
                    "config": config,
                    "intent": intent(config, k),
                    "music": {"id": f"{config}-{k:02d}-m", "duration": round(music + d, 6)},
                    "videos": vids,
                }
            )
    with open(args.out, "w") as f:
        for line in lines:
            f.write(json.dumps(line, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
