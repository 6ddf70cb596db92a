"""Shared helpers for the experiment scripts."""

import argparse
from pathlib import Path

from degenbeam.config import load

CONFIGS = Path(__file__).resolve().parent / "configs"


def parser(description: str, default_config: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", default=str(CONFIGS / default_config))
    p.add_argument("--out", default=None, help="write a CSV table here")
    return p


def load_config(path):
    return load(path)


def print_table(header, rows):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(header)]
    print("  ".join(str(h).rjust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(v).rjust(w) for v, w in zip(r, widths)))
