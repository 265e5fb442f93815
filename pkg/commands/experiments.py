from commands.common import emit
from modules import data


def run(cfg, args) -> int:
    """Listet das Protokoll in ``experiments.db``, neueste Einträge zuerst."""
    rows = data.list_experiments(cfg.out_dir, command=args.filter_command)
    summary = {"experiments": len(rows)}
    for i, row in enumerate(rows):
        summary[f"experiment.{i}"] = f"{row.label} {row.created_at} {row.id}"
    emit(summary)
    return 0
