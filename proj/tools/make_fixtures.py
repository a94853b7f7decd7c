#!/usr/bin/env python3
"""Regenerates the fixture datasets under data/fixtures/.

Usage: tools/make_fixtures.py <path-to-listen-cli> [out_dir]
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def generate(cli, spec):
    with tempfile.TemporaryDirectory() as tmp:
        spec_path = Path(tmp) / "spec.json"
        out_path = Path(tmp) / "out.json"
        spec_path.write_text(json.dumps(spec))
        subprocess.run([cli, "generate", "--spec", str(spec_path), "--out", str(out_path)],
                       check=True)
        return json.loads(out_path.read_text())


def rename_categories(dataset, attr, names):
    mapping = {f"c{i}": name for i, name in enumerate(names)}
    for item in dataset["items"]:
        if attr in item["attributes"]:
            item["attributes"][attr] = mapping[item["attributes"][attr]]
    weights = dataset.get("generator", {}).get("weights", {})
    for old, new in mapping.items():
        key = f"{attr}={old}"
        if key in weights:
            weights[f"{attr}={new}"] = weights.pop(key)


def dress(dataset, name, persona, utterance, schema_meta):
    dataset["name"] = name
    dataset["persona"] = persona
    dataset["utterance"] = utterance
    by_name = {entry["name"]: entry for entry in dataset["schema"]}
    for attr_name, (units, description) in schema_meta.items():
        by_name[attr_name]["units"] = units
        by_name[attr_name]["description"] = description
    return dataset


def main():
    cli = sys.argv[1]
    out_dir = Path(sys.argv[2] if len(sys.argv) > 2 else
                   Path(__file__).resolve().parent.parent / "data" / "fixtures")
    out_dir.mkdir(parents=True, exist_ok=True)

    exam_metrics = [
        ("student_conflicts", "conflicts", "students with two exams at once", "minimize"),
        ("back_to_back", "pairs", "students sitting consecutive exams", "minimize"),
        ("three_in_a_day", "students", "students with three exams in one day", "minimize"),
        ("room_overflow", "seats", "students assigned beyond room capacity", "minimize"),
        ("late_slots", "exams", "exams placed in evening slots", "minimize"),
        ("early_slots", "exams", "exams placed in 8am slots", "minimize"),
        ("spread_penalty", "points", "penalty for poorly spaced exams", "minimize"),
        ("room_changes", "moves", "invigilator room changes", "minimize"),
        ("large_exam_lateness", "exams", "large exams scheduled late in the window", "minimize"),
        ("split_exams", "exams", "exams split across rooms", "minimize"),
        ("weekend_exams", "exams", "exams falling on weekends", "minimize"),
        ("staff_overtime", "hours", "invigilation hours beyond contract", "minimize"),
        ("schedule_length", "days", "total days the exam period spans", "minimize"),
    ]
    spec = {
        "name": "exam_scheduling",
        "num_items": 120,
        "numerical": [{"name": n, "min": 0.0, "max": mx, "direction": d}
                      for (n, _, _, d), mx in
                      zip(exam_metrics, [400, 900, 120, 60, 40, 40, 5000, 30, 12, 15, 8,
                                          200, 21])],
        "generator": "linear",
        "ranked_count": 24,
        "tie_group_size": 6,
        "seed": 20260301,
    }
    dataset = generate(cli, spec)
    dress(dataset, "exam_scheduling",
          "You are an expert university registrar choosing an exam timetable.",
          "Minimize direct student conflicts above all; after that I care most about "
          "back-to-back exams and room overflow. Weekend exams are acceptable if they "
          "help.",
          {n: (u, desc) for n, u, desc, _ in exam_metrics})
    (out_dir / "exam_scheduling.json").write_text(json.dumps(dataset, indent=1, sort_keys=True))

    spec = {
        "name": "flights",
        "num_items": 80,
        "numerical": [
            {"name": "price", "min": 80, "max": 1400, "direction": "minimize"},
            {"name": "duration", "min": 95, "max": 1300, "direction": "minimize"},
            {"name": "stops", "min": 0, "max": 3, "direction": "minimize"},
            {"name": "layover", "min": 0, "max": 420, "direction": "minimize"},
            {"name": "departure_hour", "min": 5, "max": 23, "direction": "maximize"},
        ],
        "categorical": [{"name": "cabin", "cardinality": 3}],
        "generator": "linear",
        "ranked_count": 16,
        "seed": 20260302,
    }
    dataset = generate(cli, spec)
    rename_categories(dataset, "cabin", ["economy", "premium", "business"])
    dress(dataset, "flights",
          "You are an expert travel agent booking a long-haul flight for a client.",
          "I want the cheapest reasonable option, but I will not take anything with two "
          "or more stops, and I hate long layovers.",
          {
              "price": ("USD", "total fare"),
              "duration": ("minutes", "gate-to-gate travel time"),
              "stops": ("stops", "number of connections"),
              "layover": ("minutes", "total connection time"),
              "departure_hour": ("hour", "local departure hour, 24h clock; later is preferred"),
              "cabin": ("", "booked cabin class"),
          })
    (out_dir / "flights.json").write_text(json.dumps(dataset, indent=1, sort_keys=True))

    spec = {
        "name": "headphones",
        "num_items": 60,
        "numerical": [
            {"name": "price", "min": 40, "max": 600, "direction": "minimize"},
            {"name": "battery_life", "min": 6, "max": 80, "direction": "maximize"},
            {"name": "weight", "min": 180, "max": 420, "direction": "minimize"},
            {"name": "noise_cancellation", "min": 1, "max": 10, "direction": "maximize"},
            {"name": "sound_rating", "min": 2.5, "max": 5.0, "direction": "maximize"},
        ],
        "categorical": [{"name": "connectivity", "cardinality": 3}],
        "generator": "linear",
        "ranked_count": 12,
        "seed": 20260303,
    }
    dataset = generate(cli, spec)
    rename_categories(dataset, "connectivity", ["wireless", "wired", "hybrid"])
    dress(dataset, "headphones",
          "You are an expert audio reviewer recommending over-ear headphones.",
          "Sound quality and noise cancellation matter most to me; battery life is a "
          "bonus. I would rather not spend more than mid-range prices.",
          {
              "price": ("USD", "street price"),
              "battery_life": ("hours", "playback time per charge"),
              "weight": ("grams", "weight without case"),
              "noise_cancellation": ("score", "active noise cancellation, 1-10"),
              "sound_rating": ("stars", "aggregate reviewer score"),
              "connectivity": ("", "connection type"),
          })
    (out_dir / "headphones.json").write_text(json.dumps(dataset, indent=1, sort_keys=True))

    print(f"wrote 3 fixtures to {out_dir}")


if __name__ == "__main__":
    main()
