from __future__ import annotations

import random
import sys
from datetime import datetime, timedelta
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from sketchvc.strokes import BrushParams, StrokeCategory, StrokeRecord


def ticking_clock(start: datetime | None = None, step_ms: int = 1000):
    """Deterministic clock: each call advances by step_ms."""
    start = start or datetime(2026, 1, 1, 8, 0, 0)
    state = {"n": 0}

    def clock() -> datetime:
        value = start + timedelta(milliseconds=step_ms * state["n"])
        state["n"] += 1
        return value

    return clock


def make_record(rng: random.Random, **overrides) -> StrokeRecord:
    """A random valid StrokeRecord, optional fields and extras included."""
    n = rng.randint(1, 40)
    xs = tuple(round(rng.uniform(0, 1400), 3) for _ in range(n))
    ys = tuple(round(rng.uniform(0, 900), 3) for _ in range(n))
    pressure = tuple(round(rng.uniform(0, 1), 4) for _ in range(n))
    thickness = tuple(round(rng.uniform(0.5, 20.0), 3) for _ in range(n))
    t_offsets = None
    if rng.random() < 0.6:
        steps = [0.0] + [rng.uniform(0, 35) for _ in range(n - 1)]
        acc = 0.0
        vals = []
        for s in steps:
            acc += s
            vals.append(round(acc, 3))
        vals[0] = 0.0
        t_offsets = tuple(vals)
    extras = {}
    if rng.random() < 0.5:
        extras["session_tag"] = f"tag-{rng.randint(0, 999)}"
    if rng.random() < 0.3:
        extras["device"] = {"dpi": rng.randint(72, 600), "pen": rng.random() < 0.5}
    fields = dict(
        id=f"{rng.getrandbits(96):024x}",
        username=rng.choice(["amara", "wei", "noor", "tomas"]),
        category=rng.choice(list(StrokeCategory)),
        stroke_number=rng.randint(1, 500),
        timestamp=datetime(2025, 1, 1) + timedelta(seconds=rng.randint(0, 10**7), microseconds=rng.randint(0, 999999)),
        x_coordinates=xs,
        y_coordinates=ys,
        pressure_values=pressure,
        thickness_values=thickness,
        t_offsets_ms=t_offsets,
        color=rng.choice(["#333333", "#000", "#a1b2c3", "#FF8800"]),
        grayscale_value=round(rng.uniform(0, 1), 4),
        opacity=round(rng.uniform(0, 1), 4),
        stroke_parameters=BrushParams(
            size=round(rng.uniform(0.5, 20), 3),
            thinning=round(rng.uniform(-1, 1), 4),
            smoothing=round(rng.uniform(0, 1), 4),
            streamline=round(rng.uniform(0, 1), 4),
            simulate_pressure=rng.random() < 0.5,
        ),
        path="M 0 0 L 1 1" if rng.random() < 0.4 else None,
        image_filename=f"stroke_{rng.randint(1, 99)}.png" if rng.random() < 0.4 else None,
        extras=extras,
    )
    fields.update(overrides)
    return StrokeRecord(**fields)
