import logging
from pathlib import Path

from modules import data

logger = logging.getLogger(__name__)


def emit(summary: dict):
    """Maschinenlesbare Zusammenfassung auf stdout, ein key=value pro Zeile."""
    for key, value in summary.items():
        print(f"{key}={value}")


def record(cfg, command: str, summary: dict, paths, rows=None):
    eid = data.insert_experiment(cfg.out_dir, command, cfg.as_dict(), summary)
    for i, path in enumerate(paths):
        n_rows = rows[i] if rows and i < len(rows) else 0
        data.insert_artifact(cfg.out_dir, eid, Path(path), n_rows)
    logger.info("%d Dateien in %s geschrieben", len(paths), cfg.out_dir)
    return eid
