#!/usr/bin/env python3
"""Writes the golden files under tests/golden with a writer independent of the C++ code."""
import json
import pathlib
import struct
import sys

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent / "tests" / "golden")
out.mkdir(parents=True, exist_ok=True)

# 3x2 depth, rows top to bottom; PFM stores them bottom to top.
depth = [[1.5, 2.25, 0.0], [3.5, 0.001, 100.125]]
pfm = b"Pf\n3 2\n-1.0\n" + b"".join(struct.pack("<f", v) for row in reversed(depth) for v in row)
(out / "depth_3x2.pfm").write_bytes(pfm)

flow = [[(0.5, -1.25), (2.0, 0.0), (-3.75, 0.125)], [(10.5, -0.0625), (0.0, 0.0), (0.001, 7.0)]]
flo = struct.pack("<f", 202021.25) + struct.pack("<ii", 3, 2)
flo += b"".join(struct.pack("<ff", *v) for row in flow for v in row)
(out / "flow_3x2.flo").write_bytes(flo)

mask = bytes(255 if (x + y) % 2 == 0 else 0 for y in range(3) for x in range(4))
(out / "mask_4x3.pgm").write_bytes(b"P5\n4 3\n255\n" + mask)

rgb = [(0, 255, 128), (17, 34, 51), (200, 100, 50), (255, 255, 0)]
(out / "rgb_2x2.ppm").write_bytes(b"P6\n2 2\n255\n" + bytes(c for px in rgb for c in px))

frames = [
    {"id": 0, "fx": 56.0, "fy": 56.0, "cx": 31.5, "cy": 23.5, "width": 64, "height": 48,
     "R": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], "t": [0.0, 0.0, 0.0]},
    {"id": 1, "fx": 50.5, "fy": 49.25, "cx": 30.0, "cy": 22.0, "width": 64, "height": 48,
     "R": [0.6, -0.8, 0.0, 0.8, 0.6, 0.0, 0.0, 0.0, 1.0], "t": [0.25, -1.5, 2.0]},
]
doc = {"schema_version": 1, "convention": "camera_to_world", "frames": frames}
(out / "cameras.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

(out / "tracks.txt").write_text("0 0 1.5 2.25\n0 1 2.5 3\n0 2 3.75 0.1\n4 3 10 20.5\n4 5 11.125 19\n")
