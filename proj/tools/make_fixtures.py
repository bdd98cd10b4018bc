#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/data.

five_vehicles.csv   5 gap-free tracks, rows deliberately out of order
five_vehicles.txt   the same records in the 18-column headerless NGSIM text layout
convoy.csv          4-lane convoy around one lane-changing ego, with staggered
                    track starts and ends so that every rejection rule fires
"""

import math
import os
import sys

LANE_WIDTH = 12.0


def center(lane):
    return (lane - 0.5) * LANE_WIDTH


def five_vehicles():
    rows = []
    specs = [
        # id, first frame, frames, x0, y0, speed (ft/frame), lane
        (11, 100, 30, 6.0, 120.0, 3.1, 1),
        (12, 104, 25, 18.0, 80.5, 2.7, 2),
        (13, 110, 40, 30.25, 300.0, 3.4, 3),
        (14, 95, 22, 42.0, 40.0, 2.2, 4),
        (15, 120, 12, 54.5, 0.0, 4.0, 5),
    ]
    for vid, f0, n, x0, y0, v, lane in specs:
        for k in range(n):
            x = x0 + 0.05 * math.sin(0.3 * k + vid)
            rows.append((vid, f0 + k, round(x, 3), round(y0 + v * k, 3), lane))
    # Fixed interleaving so that parsing has to sort.
    rows.sort(key=lambda r: ((r[1] * 7919 + r[0] * 104729) % 1009, r[0], r[1]))
    return rows


def convoy():
    rows = []
    frames = range(0, 600)

    # Ego: lane 3 -> lane 2 at frame 300, cosine lateral transition over 6 s.
    for f in range(0, 461):
        if f <= 270:
            x = center(3)
        elif f >= 330:
            x = center(2)
        else:
            s = 0.5 * (1.0 - math.cos(math.pi * (f - 270) / 60.0))
            x = center(3) + (center(2) - center(3)) * s
        lane = 3 if f < 300 else 2
        rows.append((1, f, round(x, 3), round(100.0 + 3.0 * f, 3), lane))

    # Lane vehicles: (lane, offset from ego at frame 0, speed ft/frame, first, last).
    others = [
        (1, -140.0, 3.05, 310, 599),
        (1, -45.0, 3.05, 200, 599),
        (1, 35.0, 3.05, 0, 599),
        (1, 130.0, 3.05, 0, 380),
        (2, -160.0, 2.95, 0, 599),
        (2, -70.0, 3.10, 0, 599),
        (2, 20.0, 2.90, 60, 599),
        (2, 95.0, 3.00, 0, 520),
        (2, 190.0, 3.00, 0, 599),
        (3, -120.0, 3.00, 0, 599),
        (3, -55.0, 3.02, 0, 599),
        (3, 60.0, 2.98, 0, 220),
        (3, 150.0, 3.00, 240, 599),
        (4, -150.0, 3.00, 0, 599),
        (4, -50.0, 2.96, 0, 599),
        (4, 5.0, 3.06, 0, 240),
        (4, 80.0, 3.00, 160, 599),
        (4, 170.0, 3.00, 0, 599),
    ]
    vid = 100
    for lane, off, v, first, last in others:
        for f in frames:
            if first <= f <= last:
                rows.append((vid, f, round(center(lane) + 0.1 * math.sin(0.05 * f + vid), 3),
                             round(100.0 + off + v * f, 3), lane))
        vid += 1

    # Not egos: lane 5 driver, a double changer (4,3,4), a change too close to the start.
    for f in frames:
        rows.append((200, f, center(5), round(60.0 + 3.0 * f, 3), 5))
        lane = 4 if f < 200 or f >= 216 else 3
        rows.append((201, f, center(lane), round(400.0 + 3.0 * f, 3), lane))
        lane = 2 if f < 20 else 1
        rows.append((202, f, center(lane) if f >= 20 else center(2), round(3.0 * f - 40.0, 3), lane))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def write_csv(path, rows):
    with open(path, "w") as out:
        out.write("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n")
        for vid, f, x, y, lane in rows:
            out.write(f"{vid},{f},{x:.3f},{y:.3f},{lane}\n")


def write_ngsim_text(path, rows):
    # Vehicle_ID Frame_ID Total_Frames Global_Time Local_X Local_Y Global_X Global_Y
    # v_Length v_Width v_Class v_Vel v_Acc Lane_ID Preceding Following Space_Hdwy Time_Hdwy
    with open(path, "w") as out:
        for vid, f, x, y, lane in rows:
            out.write(f"{vid:5d} {f:5d}   40 {1118846980200 + 100 * f} {x:8.3f} {y:9.3f} "
                      f"6042842.1 2133117.5 14.5  4.9 2 35.00 0.00 {lane:2d}  0  0  0.00  0.00\n")


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests", "data")
    out_dir = sys.argv[1] if len(sys.argv) > 1 else root
    os.makedirs(out_dir, exist_ok=True)
    five = five_vehicles()
    write_csv(os.path.join(out_dir, "five_vehicles.csv"), five)
    write_ngsim_text(os.path.join(out_dir, "five_vehicles.txt"), five)
    write_csv(os.path.join(out_dir, "convoy.csv"), convoy())


if __name__ == "__main__":
    main()
