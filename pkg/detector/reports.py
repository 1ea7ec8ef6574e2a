# detector/reports.py
from pathlib import Path

import pandas as pd
import ujson
from logzero import logger

SCORE_COLUMNS = ["run", "graph_id", "source", "s_l", "s_g", "s_G"]


def write_json(path, payload):
    Path(path).write_text(ujson.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_train_log(path, records):
    with open(path, "w") as fh:
        for record in records:
            fh.write(ujson.dumps(record) + "\n")


def read_train_log(path):
    with open(path) as fh:
        return [ujson.loads(line) for line in fh if line.strip()]


def write_scores(path, rows, tree_term=False):
    columns = SCORE_COLUMNS + (["s_t"] if tree_term else [])
    frame = pd.DataFrame(rows, columns=columns)
    frame.to_csv(path, index=False, float_format="%.10g")
    return frame


def write_outputs(out, report, rows, log_records, wall_clock):
    """scores.csv, report.json, timing.json and train_log.jsonl under `out`."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_scores(out / "scores.csv", rows, report.config.get("score_tree_term", False))
    write_json(out / "report.json", report.as_dict())
    write_json(out / "timing.json", {"wall_clock_seconds": wall_clock, "runs": report.n_runs})
    write_train_log(out / "train_log.jsonl", log_records)
    logger.info(f"Wrote scores.csv, report.json, timing.json and train_log.jsonl to {out}")
