"""Kommandozeile: optimale Mutationsraten und Laufzeitschranken für (1+lambda) EAs."""
import argparse
import logging
import sys

from modules import config
from modules.config import ConfigError
from modules.data import SchemaError
from commands import experiments, heatmap, lowerbound, regret, simulate, solve

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

logger = logging.getLogger("app")

COMMANDS = [
    ("solve", "DP mit Monte-Carlo-Übergängen (tables.csv, optimal.csv)"),
    ("solve-exact", "DP mit exakten Übergängen, nur OneMax/Ruggedness"),
    ("simulate", "(1+lambda) EA mit Ratensteuerung laufen lassen (trace.csv, runs.csv)"),
    ("regret", "Regret pro Iteration aus Tabellen und Läufen (regret.csv)"),
    ("heatmap", "Parameter-Effizienz je Zelle (heatmap.csv)"),
    ("lowerbound", "Laufzeitschranken für mehrere lambda (lowerbound.csv)"),
    ("experiments", "Protokoll der bisherigen Aufrufe aus experiments.db"),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="Konfigurationsdatei (key = value)")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out-dir")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="beliebigen Konfigurationsschlüssel überschreiben")
    g.add_argument("--problem", choices=["onemax", "ruggedness"])
    g.add_argument("--n", type=int)
    g.add_argument("--lambda", dest="lam", type=int)
    g.add_argument("-v", "--verbose", action="store_true")
    g.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="app.py", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, parents=[common], help=text) for name, text in COMMANDS}

    parsers["solve"].add_argument("--provider", choices=["mc", "exact"])
    for name in ("solve", "solve-exact", "lowerbound"):
        parsers[name].add_argument("--iterations", type=int, help="mc.iterations (N_I)")
        parsers[name].add_argument("--successes", type=int, help="mc.successes (N_T)")

    p = parsers["simulate"]
    p.add_argument("--policy", choices=["static", "ab", "two-rate"])
    p.add_argument("--p-min", help="Zahl oder 1/n, 1/n^2")
    p.add_argument("--p-max")
    p.add_argument("--runs", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--initial-fitness", type=int)

    for name in ("regret", "heatmap"):
        parsers[name].add_argument("--tables", help="tables.csv oder Verzeichnis (Standard: --out-dir)")
    parsers["regret"].add_argument("--trace", help="trace.csv oder Verzeichnis (Standard: --out-dir)")
    parsers["regret"].add_argument("--exact-rates", action="store_true",
                                   help="Raten müssen exakt auf dem Gitter liegen")

    p = parsers["lowerbound"]
    p.add_argument("--tables", help="vorhandene Tabellen statt neu zu lösen")
    p.add_argument("--lambdas", help="Kommaliste, z.B. 1,2,4,8")
    p.add_argument("--provider", choices=["mc", "exact"])

    parsers["experiments"].add_argument("--command", dest="filter_command",
                                        help="nur Einträge dieses Unterbefehls")
    return parser


FLAG_KEYS = {
    "seed": "seed", "workers": "workers", "out_dir": "out_dir", "problem": "problem.name",
    "n": "problem.n", "lam": "ea.lambda", "provider": "provider", "iterations": "mc.iterations",
    "successes": "mc.successes", "policy": "control.policy", "p_min": "control.p_min",
    "p_max": "control.p_max", "runs": "simulate.runs", "budget": "simulate.budget",
    "initial_fitness": "simulate.initial_fitness", "lambdas": "ea.lambdas",
}


def overrides_from(args) -> dict:
    values = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set erwartet KEY=VALUE, nicht {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            values[key] = value
    # --seed pins the Monte-Carlo streams too unless mc.seed is given explicitly
    if args.seed is not None and "mc.seed" not in values:
        values["mc.seed"] = args.seed
    return values


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        cfg = config.load(args.config, overrides_from(args))
    except ConfigError as e:
        logger.error("Ungültige Konfiguration: %s", e)
        return EXIT_CONFIG

    try:
        if args.command == "solve":
            return solve.run(cfg, args)
        elif args.command == "solve-exact":
            return solve.run(cfg, args, provider="exact")
        elif args.command == "simulate":
            return simulate.run(cfg, args)
        elif args.command == "regret":
            return regret.run(cfg, args)
        elif args.command == "heatmap":
            return heatmap.run(cfg, args)
        elif args.command == "lowerbound":
            return lowerbound.run(cfg, args)
        else:
            return experiments.run(cfg, args)
    except (ConfigError, SchemaError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except Exception:
        logger.exception("Fehler bei %s", args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
