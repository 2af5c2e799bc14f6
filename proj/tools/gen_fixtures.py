#!/usr/bin/env python3
"""Regenerates the bundled CSV fixtures under data/.

IEEE 37-node feeder topology with segment lengths and conductor configurations
from the public test-feeder data; impedances use the phase-A self terms and
are expressed per unit on a 1 MVA base at a rescaled line voltage so that the
MW-scale loads of the bundled scenarios stay inside a +/-5% voltage band.

Solar and temperature profiles are synthetic stand-ins (sunny day with cloud
dips; diurnal outdoor temperature), 06:00 to 18:00, t in seconds from 06:00.
"""
import math
import os
import sys

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

SEGMENTS = [
    (799, 701, 1850, "721"), (701, 702, 960, "722"), (702, 705, 400, "724"),
    (702, 713, 360, "723"), (702, 703, 1320, "722"), (703, 727, 240, "724"),
    (703, 730, 600, "723"), (704, 714, 80, "724"), (704, 720, 800, "723"),
    (705, 742, 320, "724"), (705, 712, 240, "724"), (706, 725, 280, "724"),
    (707, 724, 760, "724"), (707, 722, 120, "724"), (708, 733, 320, "723"),
    (708, 732, 320, "724"), (709, 731, 600, "723"), (709, 708, 320, "723"),
    (710, 735, 200, "724"), (710, 736, 1280, "724"), (711, 741, 400, "723"),
    (711, 740, 200, "724"), (713, 704, 520, "723"), (714, 718, 520, "724"),
    (720, 707, 920, "724"), (720, 706, 600, "723"), (727, 744, 280, "723"),
    (730, 709, 200, "723"), (733, 734, 560, "723"), (734, 737, 640, "723"),
    (734, 710, 520, "724"), (737, 738, 400, "723"), (738, 711, 400, "723"),
    (744, 728, 200, "724"), (744, 729, 280, "724"), (709, 775, 0, "XFM-1"),
]
# ohm per mile, phase-A self impedance
CONFIGS = {
    "721": (0.2926, 0.1973),
    "722": (0.4751, 0.2973),
    "723": (1.2936, 0.6713),
    "724": (2.0952, 0.7758),
}
BASE_KV = float(os.environ.get("IEEE37_BASE_KV", "24.9"))
BASE_MVA = 1.0


def ieee37():
    zbase = BASE_KV ** 2 / BASE_MVA
    labels = [799]
    for a, b, _, _ in SEGMENTS:
        for n in (a, b):
            if n not in labels:
                labels.append(n)
    index = {lab: i for i, lab in enumerate(labels)}
    rows = []
    for a, b, ft, cfg in SEGMENTS:
        if cfg == "XFM-1":
            # 500 kVA, R=0.09%, X=1.81% on its own rating, high side 4.8 kV
            z_ohm = complex(0.0009, 0.0181) * 4.8 ** 2 / 0.5
        else:
            r, x = CONFIGS[cfg]
            z_ohm = complex(r, x) * ft / 5280.0
        z = z_ohm / zbase
        rows.append((index[a], index[b], z.real, z.imag, 0.0))
    return labels, rows


def write_network(name, rows):
    with open(os.path.join(OUT, name), "w") as fh:
        fh.write("from,to,r,x,b_shunt\n")
        for a, b, r, x, bs in rows:
            fh.write(f"{a},{b},{r:.17g},{x:.17g},{bs:.17g}\n")


def pv_profiles():
    # three sites, normalized to [0, 1]; cloud dips differ per site
    dips = [
        [(3.2, 0.35, 0.45), (6.5, 0.25, 0.3)],
        [(3.4, 0.30, 0.40), (7.8, 0.40, 0.35)],
        [(2.9, 0.20, 0.30), (6.7, 0.30, 0.25), (9.1, 0.20, 0.2)],
    ]
    rows = []
    for k in range(0, 12 * 12 + 1):
        h = k / 12.0  # hours after 06:00
        t = int(round(h * 3600))
        vals = []
        for site in dips:
            base = math.sin(math.pi * h / 12.0) ** 1.3 if 0 < h < 12 else 0.0
            shade = 1.0
            for c, w, depth in site:
                shade -= depth * math.exp(-0.5 * ((h - c) / (w / 2.0)) ** 2)
            vals.append(max(0.0, base * shade))
        rows.append((t, vals))
    return rows


def outdoor_temperature():
    rows = []
    for k in range(0, 12 * 12 + 1):
        h = k / 12.0
        # 68F at 06:00, peak ~95F near 15:00
        temp = 81.5 - 13.5 * math.cos(math.pi * (h) / 9.0) if h <= 9 else \
            95.0 - 10.0 * ((h - 9) / 3.0) ** 2
        rows.append((int(round(h * 3600)), temp))
    return rows


def main():
    os.makedirs(OUT, exist_ok=True)
    labels, rows = ieee37()
    write_network("ieee37.csv", rows)
    with open(os.path.join(OUT, "ieee37_buses.csv"), "w") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{lab}\n")
    write_network("two_bus.csv", [(0, 1, 0.02, 0.04, 0.0)])
    write_network("motivating_chain5.csv",
                  [(i, i + 1, 1.0, 0.0, 0.0) for i in range(4)])
    write_network("motivating_chain9.csv",
                  [(i, i + 1, 1.0, 0.0, 0.0) for i in range(8)])
    with open(os.path.join(OUT, "pv_profile.csv"), "w") as fh:
        fh.write("t,site_a,site_b,site_c\n")
        for t, vals in pv_profiles():
            fh.write(f"{t}," + ",".join(f"{v:.6f}" for v in vals) + "\n")
    with open(os.path.join(OUT, "outdoor_temp.csv"), "w") as fh:
        fh.write("t,value\n")
        for t, v in outdoor_temperature():
            fh.write(f"{t},{v:.4f}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
