from pathlib import Path

from commands.common import emit, record
from modules import data
from modules.analysis import heatmap


def run(cfg, args) -> int:
    tables = data.read_tables(args.tables or cfg.out_dir)
    df = data.heatmap_frame(heatmap(tables))
    path = data.write_csv(df, Path(cfg.out_dir) / "heatmap.csv")
    summary = {"cells": len(df), "rows": tables.f_max - tables.f_min}
    emit(summary)
    record(cfg, "heatmap", summary, [path], [len(df)])
    return 0
