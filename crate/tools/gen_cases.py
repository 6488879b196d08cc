#!/usr/bin/env python3
"""Generates the JSON case files shipped under cases/."""
import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "cases")


def write(name, doc):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    print("wrote", path)


# --- toy 3-bus case: mild, uncongested, for smoke tests -------------------
toy3 = {
    "buses": 3,
    "slack_bus": 0,
    "base_mva": 100.0,
    "lines": [
        {"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 150.0},
        {"from": 1, "to": 2, "susceptance": 10.0, "limit_mw": 150.0},
        {"from": 0, "to": 2, "susceptance": 10.0, "limit_mw": 150.0},
    ],
    "generators": [
        {"bus": 0, "cost": 10.0, "p_min": 0.0, "p_max": 200.0},
        {"bus": 2, "cost": 40.0, "p_min": 0.0, "p_max": 150.0},
    ],
    "wind": [{"bus": 1, "forecast_mw": 30.0}],
    "demand": [{"bus": 2, "mw": 120.0}],
}
write("toy3.json", toy3)

# --- desk 3-bus case: one tight line, sized so the line constraint binds ---
# Cheap generation at bus 0, expensive backup at bus 2, wind at buses 1 and
# 2, load at bus 2. The direct 0-2 line is the tight corridor.
desk3 = {
    "buses": 3,
    "slack_bus": 0,
    "base_mva": 100.0,
    "lines": [
        {"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 250.0},
        {"from": 1, "to": 2, "susceptance": 10.0, "limit_mw": 250.0},
        {"from": 0, "to": 2, "susceptance": 10.0, "limit_mw": 120.0},
    ],
    "generators": [
        {"bus": 0, "cost": 10.0, "p_min": 0.0, "p_max": 400.0},
        {"bus": 2, "cost": 100.0, "p_min": 0.0, "p_max": 400.0},
    ],
    "wind": [
        {"bus": 1, "forecast_mw": 60.0},
        {"bus": 2, "forecast_mw": 40.0},
    ],
    "demand": [{"bus": 2, "mw": 260.0}],
}
write("desk3.json", desk3)

# --- 24-bus synthetic case shaped like a single-area reliability test grid -
# 38 branches, wind farms at buses 7 and 14 (0-based), doubled generation
# capacity, loads totalling 2850 MW.
reactance = [
    (0, 1, 0.0139), (0, 2, 0.2112), (0, 4, 0.0845),
    (1, 3, 0.1267), (1, 5, 0.1920),
    (2, 8, 0.1190), (2, 23, 0.0839),
    (3, 8, 0.1037),
    (4, 9, 0.0883),
    (5, 9, 0.0605),
    (6, 7, 0.0614),
    (7, 8, 0.1651), (7, 9, 0.1651),
    (8, 10, 0.0839), (8, 11, 0.0839),
    (9, 10, 0.0839), (9, 11, 0.0839),
    (10, 12, 0.0476), (10, 13, 0.0418),
    (11, 12, 0.0476), (11, 22, 0.0966),
    (12, 22, 0.0865),
    (13, 15, 0.0389),
    (14, 15, 0.0173), (14, 20, 0.0490), (14, 20, 0.0490), (14, 23, 0.0519),
    (15, 16, 0.0259), (15, 18, 0.0231),
    (16, 17, 0.0144), (16, 21, 0.1053),
    (17, 20, 0.0259), (17, 20, 0.0259),
    (18, 19, 0.0396), (18, 19, 0.0396),
    (19, 22, 0.0216), (19, 22, 0.0216),
    (20, 21, 0.0678),
]
assert len(reactance) == 38

# 80%-scaled ratings: 138 kV lines 140 MW, 230 kV lines 400 MW,
# transformers 320 MW; the wind-corridor lines are tightened so the chance
# constraints become active.
transformers = {(2, 23), (8, 10), (8, 11), (9, 10), (9, 11)}
tight = {
    (6, 7): 95.0,    # feeder into the bus-7 wind pocket
    (7, 8): 80.0,    # corridor draining the bus-7 farm east
    (7, 9): 80.0,
    (14, 15): 220.0, # corridor draining the bus-14 farm
    (13, 15): 200.0,
    (15, 16): 220.0,
}
lines = []
for f, t, x in reactance:
    if (f, t) in tight:
        lim = tight[(f, t)]
    elif (f, t) in transformers:
        lim = 320.0
    elif f <= 9 and t <= 9:
        lim = 140.0
    else:
        lim = 400.0
    lines.append({
        "from": f,
        "to": t,
        "susceptance": round(1.0 / x, 6),
        "limit_mw": lim,
    })

generators = [
    {"bus": 0,  "cost": 26.0, "p_min": 0.0, "p_max": 384.0},
    {"bus": 1,  "cost": 26.5, "p_min": 0.0, "p_max": 384.0},
    {"bus": 6,  "cost": 24.0, "p_min": 0.0, "p_max": 600.0},
    {"bus": 12, "cost": 22.0, "p_min": 0.0, "p_max": 1182.0},
    {"bus": 14, "cost": 18.0, "p_min": 0.0, "p_max": 430.0},
    {"bus": 15, "cost": 17.0, "p_min": 0.0, "p_max": 310.0},
    {"bus": 17, "cost": 12.0, "p_min": 0.0, "p_max": 800.0},
    {"bus": 20, "cost": 11.5, "p_min": 0.0, "p_max": 800.0},
    {"bus": 21, "cost": 8.0,  "p_min": 0.0, "p_max": 600.0},
    {"bus": 22, "cost": 14.0, "p_min": 0.0, "p_max": 1320.0},
]

demand = [
    (0, 108), (1, 97), (2, 180), (3, 74), (4, 71), (5, 136), (6, 125),
    (7, 171), (8, 175), (9, 195), (12, 265), (13, 194), (14, 317),
    (15, 100), (17, 333), (18, 181), (19, 128),
]
assert sum(d for _, d in demand) == 2850

rts24 = {
    "buses": 24,
    "slack_bus": 12,
    "base_mva": 100.0,
    "lines": lines,
    "generators": generators,
    "wind": [
        {"bus": 7, "forecast_mw": 125.0},
        {"bus": 14, "forecast_mw": 175.0},
    ],
    "demand": [{"bus": b, "mw": float(d)} for b, d in demand],
}
write("rts24_synthetic.json", rts24)
