#!/usr/bin/env python3
"""Genus-2 surface as the double of a rectangle with two square holes.

Both copies share the boundary vertices; the lower copy is reversed so the
surface is consistently oriented. Heights are y + tilt*x plus Gaussian
features on the upper copy: one dip and two bumps.
"""
import argparse
import math

W, H, S = 3.0, 8.0, 0.25
HOLES = [(1.0, 2.0, 2.0, 3.0), (1.0, 2.0, 5.0, 6.0)]
TILT = 0.1
FEATURES = [  # (cx, cy, amplitude, sigma)
    (1.5, 4.0, -1.0, 0.4),
    (1.5, 1.0, 1.15, 0.4),
    (1.5, 7.0, 1.3, 0.4),
]


def inside_hole(x, y, strict=True):
    for x0, x1, y0, y1 in HOLES:
        if strict and x0 < x < x1 and y0 < y < y1:
            return True
        if not strict and x0 <= x <= x1 and y0 <= y <= y1:
            return True
    return False


def on_boundary(x, y):
    if x in (0.0, W) or y in (0.0, H):
        return True
    return inside_hole(x, y, strict=False) and not inside_hole(x, y, strict=True)


def build():
    nx, ny = round(W / S), round(H / S)
    node = lambda i, j: (round(i * S, 10), round(j * S, 10))
    verts, index = [], {}

    def vid(i, j, copy):
        x, y = node(i, j)
        key = (i, j, 0 if on_boundary(x, y) else copy)
        if key not in index:
            index[key] = len(verts)
            verts.append((x, y, key[2]))
        return index[key]

    tris = []
    for j in range(ny):
        for i in range(nx):
            cx, cy = (i + 0.5) * S, (j + 0.5) * S
            if inside_hole(cx, cy):
                continue
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            b = [on_boundary(*node(*c)) for c in corners]
            # keep diagonals away from boundary-to-boundary chords
            if b[1] and b[3]:
                halves = [(0, 1, 2), (0, 2, 3)]
            else:
                halves = [(0, 1, 3), (1, 2, 3)]
            for copy in (1, 2):
                for t in halves:
                    ids = [vid(*corners[k], copy) for k in t]
                    tris.append(ids if copy == 1 else ids[::-1])
    return verts, tris


def height(x, y, copy):
    v = y + TILT * x
    if copy != 2:
        for cx, cy, a, s in FEATURES:
            v += a * math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s))
    return v


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("output")
    args = ap.parse_args()
    verts, tris = build()
    with open(args.output, "w") as out:
        out.write("# genus-2 surface: doubled rectangle with two holes, height y + tilt*x with features\n")
        out.write(f"2 {len(verts)} {len(tris)}\n")
        for x, y, copy in verts:
            z = 0.0 if copy == 0 else (0.5 if copy == 1 else -0.5)
            out.write(f"{x:.6f} {y:.6f} {z:.1f} {height(x, y, copy):.17g}\n")
        for t in tris:
            out.write(" ".join(map(str, t)) + "\n")


if __name__ == "__main__":
    main()
