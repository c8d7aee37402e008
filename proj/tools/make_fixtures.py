#!/usr/bin/env python3
"""Writes the fixture surfaces and curves into fixtures/."""
import json
import math
import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


def regpoly(k, side=1.0, ox=0.0):
    pts = [(ox, 0.0)]
    ang = 0.0
    for _ in range(k - 1):
        x, y = pts[-1]
        pts.append((x + side * math.cos(ang), y + side * math.sin(ang)))
        ang += 2 * math.pi / k
    return pts


def surface(n, polys, gluings):
    return {
        "n": n,
        "polygons": [{"id": i, "vertices": [list(v) for v in p]} for i, p in enumerate(polys)],
        "gluings": [{"from": list(a), "to": list(b), "rotation": r} for a, b, r in gluings],
    }


def rotation_index(polys, n, a, b):
    (p, e), (q, g) = a, b
    P, Q = polys[p], polys[q]
    de = math.atan2(P[(e + 1) % len(P)][1] - P[e][1], P[(e + 1) % len(P)][0] - P[e][0])
    dg = math.atan2(Q[(g + 1) % len(Q)][1] - Q[g][1], Q[(g + 1) % len(Q)][0] - Q[g][0])
    k = ((de + math.pi - dg) % (2 * math.pi)) / (2 * math.pi / n)
    assert abs(k - round(k)) < 1e-9, (a, b)
    return round(k) % n


def glue(polys, n, pairs):
    return [(a, b, rotation_index(polys, n, a, b)) for a, b in pairs]


def centroid(p):
    return (sum(v[0] for v in p) / len(p), sum(v[1] for v in p) / len(p))


def petal_curve(polys, gluings, start, word, inset=0.08):
    """Closed curve from the polygon centre through edge-crossing petals.

    word lists edge indices crossed in turn, starting in polygon `start`."""
    partner = {}
    for a, b, _ in gluings:
        partner[tuple(a)] = tuple(b)
        partner[tuple(b)] = tuple(a)

    def near_mid(p, e):
        P = polys[p]
        m = ((P[e][0] + P[(e + 1) % len(P)][0]) / 2, (P[e][1] + P[(e + 1) % len(P)][1]) / 2)
        c = centroid(P)
        return (m[0] + inset * (c[0] - m[0]), m[1] + inset * (c[1] - m[1]))

    pts = [[start, *centroid(polys[start])]]
    cur = start
    for e in word:
        q, f = partner[(cur, e)]
        pts.append([cur, *near_mid(cur, e)])
        pts.append([q, *near_mid(q, f)])
        pts.append([q, *centroid(polys[q])])
        cur = q
    assert cur == start, "word does not return to the start polygon"
    pts.pop()
    return {"closed": True, "waypoints": pts}


def write(name, doc):
    with open(os.path.join(OUT, name), "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    oct_ = [regpoly(8)]

    octagon = glue(oct_, 1, [((0, i), (0, i + 4)) for i in range(4)])
    write("octagon.json", surface(1, oct_, octagon))
    write("octagon_vertical.json", petal_curve(oct_, octagon, 0, [0]))
    write("octagon_diag.json", petal_curve(oct_, octagon, 0, [0, 1]))
    write("octagon_long.json", petal_curve(oct_, octagon, 0, [0, 2, 5]))
    write("octagon_mixed.json", petal_curve(oct_, octagon, 0, [1, 3, 3]))

    left = glue(oct_, 4, [((0, 0), (0, 2)), ((0, 1), (0, 3)), ((0, 4), (0, 6)), ((0, 5), (0, 7))])
    write("fig1_left.json", surface(4, oct_, left))
    write("fig1_left_a.json", petal_curve(oct_, left, 0, [0]))
    write("fig1_left_b.json", petal_curve(oct_, left, 0, [0, 4]))
    write("fig1_left_c.json", petal_curve(oct_, left, 0, [1, 5, 6]))

    hexes = [regpoly(6), regpoly(6, ox=3.0)]
    right = glue(hexes, 3, [((0, i), (1, (i + 1) % 6)) for i in range(6)])
    write("fig1_right.json", surface(3, hexes, right))
    write("fig1_right_a.json", petal_curve(hexes, right, 0, [0, 3]))
    write("fig1_right_b.json", petal_curve(hexes, right, 0, [0, 4]))
    write("fig1_right_c.json", petal_curve(hexes, right, 0, [1, 4, 2, 0]))

    # same gluing read with sixfold rotations; the fig1_right curves apply
    write("hexagons_n6.json", surface(6, hexes, glue(hexes, 6, [((0, i), (1, (i + 1) % 6)) for i in range(6)])))

    doubles = [regpoly(8), regpoly(8, ox=4.0)]
    half = glue(doubles, 2, [((0, i), (1, i)) for i in range(8)])
    write("double_octagon.json", surface(2, doubles, half))
    write("double_octagon_a.json", petal_curve(doubles, half, 0, [0, 1]))
    write("double_octagon_b.json", petal_curve(doubles, half, 0, [0, 4]))
    write("double_octagon_c.json", petal_curve(doubles, half, 0, [2, 3, 5, 1]))


if __name__ == "__main__":
    main()
