"""Generate the shipped three-lane highway scenario (src/infratrack/data/scenarios/highway.yaml).

Vehicles enter at x=-20 m and leave at x=320 m. A few change lanes when the
target lane has room for the rest of their trip.
"""

import argparse
from pathlib import Path

import numpy as np
import yaml

LANES = [0.0, 3.5, 7.0]
SPEEDS = [22.0, 27.0, 32.0]
X_IN, X_OUT = -20.0, 320.0
MIN_GAP = 15.0

SENSORS = [
    {
        "source_id": "cam",
        "rate": 10.0,
        "rate_mode": "cam",
        "pos_sigma": 0.4,
        "vel_sigma": 0.2,
        "yaw_sigma": 2.0,
        "observe": ["px", "py", "vx", "vy", "theta", "w", "l"],
        "dims_sigma": 0.05,
        "class_hint": True,
        "delay": 0.08,
    },
    {
        "source_id": "lidar",
        "rate": 10.0,
        "phase": 0.04,
        "fov": [100.0, -2.0, 300.0, 9.0],
        "pos_sigma": 0.3,
        "yaw_sigma": 3.0,
        "dims_sigma": 0.1,
        "dropout": 0.05,
        "observe": ["px", "py", "theta", "w", "l", "h"],
        "delay": 0.05,
    },
    {
        "source_id": "ssl",
        "rate": 10.0,
        "phase": 0.06,
        "fov": [0.0, -2.0, 150.0, 5.5],
        "pos_sigma": 0.3,
        "dims_sigma": 0.2,
        "dropout": 0.05,
        "observe": ["px", "py", "w", "l"],
        "delay": 0.02,
    },
]


def positions(wps, times):
    wps = np.asarray(wps)
    x = np.interp(times, wps[:, 0], wps[:, 1], left=np.nan, right=np.nan)
    y = np.interp(times, wps[:, 0], wps[:, 2], left=np.nan, right=np.nan)
    return x, y


def clear(candidate, others, times):
    cx, cy = positions(candidate, times)
    for wps in others:
        ox, oy = positions(wps, times)
        d = np.hypot(cx - ox, cy - oy)
        if np.nanmin(d, initial=np.inf) < MIN_GAP:
            return False
    return True


def build(duration: float, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    times = np.arange(0.0, duration + 30.0, 0.1)
    agents = []
    for lane, (y, v) in enumerate(zip(LANES, SPEEDS)):
        t = float(rng.uniform(0.0, 4.0))
        while t < duration - 2.0:
            truck = lane == 0 and rng.random() < 0.3
            travel = (X_OUT - X_IN) / v
            wps = [[t, X_IN, y], [t + travel, X_OUT, y]]
            if lane < 2 and rng.random() < 0.25:
                # change one lane to the left over 4 s, starting somewhere mid-road
                x0 = float(rng.uniform(60.0, 180.0))
                t0 = t + (x0 - X_IN) / v
                t1 = t0 + 4.0
                x1 = x0 + 4.0 * v
                ny = LANES[lane + 1]
                changed = [[t, X_IN, y], [t0, x0, y], [t1, x1, ny], [t + travel, X_OUT, ny]]
                if clear(changed, [a["waypoints"] for a in agents], times):
                    wps = changed
            if clear(wps, [a["waypoints"] for a in agents], times):
                dims = {"length": 12.0, "width": 2.5, "height": 3.5} if truck else {"length": 4.5, "width": 1.8, "height": 1.5}
                agents.append(
                    {
                        "id": len(agents) + 1,
                        "class": "truck" if truck else "car",
                        "dims": dims,
                        "waypoints": [[round(a, 4), round(b, 4), round(c, 4)] for a, b, c in wps],
                    }
                )
            t += float(rng.uniform(6.0, 12.0))
    return {"duration": duration, "seed": 0, "truth_rate": 10.0, "agents": agents, "sensors": SENSORS}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=300.0)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path, default=Path("src/infratrack/data/scenarios/highway.yaml"))
    args = ap.parse_args()
    doc = build(args.duration, args.seed)
    header = "# Generated by scripts/make_highway.py; three lanes along +x, three detection sources.\n"
    args.out.write_text(header + yaml.safe_dump(doc, sort_keys=False, default_flow_style=None), encoding="utf-8")
    print(f"{len(doc['agents'])} agents -> {args.out}")


if __name__ == "__main__":
    main()
