"""Konfiguration aus flachen ``key = value``-Dateien und Overrides per Flag."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from modules.control import P_MAX_DEFAULT, PolicyKind
from modules.dp import GridSpec, grid_rates
from modules.montecarlo import McConfig
from modules.problems import PROBLEM_NAMES, ProblemModel, make_problem

logger = logging.getLogger(__name__)

PROVIDERS = ("mc", "exact")

# settings of the Ruggedness experiments at n=100
DEFAULTS = {
    "problem.name": "ruggedness",
    "problem.n": 100,
    "ea.lambda": 8,
    "ea.lambdas": "1,2,4,8,16,32,64,128,256,512",
    "grid.mult.base": 1e-4,
    "grid.mult.alpha": 10 ** (1 / 25),
    "grid.mult.count": 101,
    "grid.add.base": 0.0,
    "grid.add.step": 0.0,
    "grid.add.count": 0,
    "mc.iterations": 10**6,
    "mc.successes": 5 * 10**4,
    "mc.seed": "",
    "provider": "mc",
    "control.policy": "static",
    "control.p_min": "1/n^2",
    "control.p_max": P_MAX_DEFAULT,
    "control.p_init": "1/n",
    "tworate.clamp_offspring": False,
    "simulate.runs": 100,
    "simulate.budget": 10**7,
    "simulate.initial_fitness": "",
    "out_dir": "results",
    "workers": 1,
    "seed": 1,
}


class ConfigError(ValueError):
    pass


def parse_kv_text(text: str, source: str = "<text>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: erwartet 'key = value', gefunden {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def format_kv(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Konfiguration {path} nicht lesbar: {e}") from e
    values = parse_kv_text(text, str(path))
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{path}: unbekannte Schlüssel {', '.join(unknown)}")
    return values


def merge(*layers: dict) -> dict:
    values = dict(DEFAULTS)
    for layer in layers:
        for key, value in layer.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unbekannter Schlüssel {key!r}")
            values[key] = value
    return values


# ---- value parsing ----

def _int(values, key) -> int:
    try:
        return int(str(values[key]).replace("_", ""))
    except ValueError:
        raise ConfigError(f"{key}: keine ganze Zahl: {values[key]!r}") from None


def _float(values, key) -> float:
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key}: keine Zahl: {values[key]!r}") from None


def _bool(values, key) -> bool:
    v = values[key]
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "ja", "on"):
        return True
    if s in ("0", "false", "no", "nein", "off"):
        return False
    raise ConfigError(f"{key}: kein Wahrheitswert: {v!r}")


def parse_rate(value, n: int, key: str = "rate") -> float:
    """Rate literal or one of the presets ``1/n``, ``1/n^2``, ``2/n``."""
    s = str(value).strip().replace(" ", "")
    presets = {"1/n": 1 / n, "2/n": 2 / n, "1/n^2": 1 / n**2, "1/n2": 1 / n**2, "1/n**2": 1 / n**2}
    if s in presets:
        return presets[s]
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"{key}: unbekannte Rate {value!r}") from None


def parse_lambdas(value) -> tuple:
    try:
        lambdas = tuple(int(s) for s in str(value).split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"ea.lambdas: ungültige Liste {value!r}") from None
    if not lambdas or min(lambdas) < 1:
        raise ConfigError("ea.lambdas braucht mindestens ein lambda >= 1")
    return lambdas


@dataclass(frozen=True)
class RunConfig:
    problem_name: str
    n: int
    lam: int
    lambdas: tuple
    grid: GridSpec
    mc: McConfig
    provider: str
    policy: str
    p_min: float
    p_max: float
    p_init: Optional[float]
    clamp_offspring: bool
    runs: int
    budget: int
    initial_fitness: Optional[int]
    out_dir: Path
    workers: int
    seed: int

    def make_problem(self) -> ProblemModel:
        return make_problem(self.problem_name, self.n)

    def as_dict(self) -> dict:
        """Flat key/value view, as written to the experiment ledger."""
        return {
            "problem.name": self.problem_name, "problem.n": self.n, "ea.lambda": self.lam,
            "ea.lambdas": ",".join(map(str, self.lambdas)),
            "grid.mult.base": self.grid.mult_base, "grid.mult.alpha": self.grid.mult_alpha,
            "grid.mult.count": self.grid.mult_count, "grid.add.base": self.grid.add_base,
            "grid.add.step": self.grid.add_step, "grid.add.count": self.grid.add_count,
            "mc.iterations": self.mc.iterations, "mc.successes": self.mc.successes,
            "mc.seed": self.mc.seed, "provider": self.provider, "control.policy": self.policy,
            "control.p_min": self.p_min, "control.p_max": self.p_max,
            "control.p_init": "" if self.p_init is None else self.p_init,
            "tworate.clamp_offspring": self.clamp_offspring, "simulate.runs": self.runs,
            "simulate.budget": self.budget,
            "simulate.initial_fitness": "" if self.initial_fitness is None else self.initial_fitness,
            "out_dir": str(self.out_dir), "workers": self.workers, "seed": self.seed,
        }


def build(values: dict) -> RunConfig:
    name = str(values["problem.name"]).strip().lower()
    if name not in PROBLEM_NAMES:
        raise ConfigError(f"problem.name: {name!r} nicht in {', '.join(PROBLEM_NAMES)}")
    n = _int(values, "problem.n")
    try:
        problem = make_problem(name, n)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    lam = _int(values, "ea.lambda")
    if lam < 1:
        raise ConfigError("ea.lambda muss mindestens 1 sein")

    grid = GridSpec(
        mult_base=parse_rate(values["grid.mult.base"], n, "grid.mult.base"),
        mult_alpha=_float(values, "grid.mult.alpha"),
        mult_count=_int(values, "grid.mult.count"),
        add_base=_float(values, "grid.add.base"),
        add_step=_float(values, "grid.add.step"),
        add_count=_int(values, "grid.add.count"),
    )
    try:
        grid_rates(grid)
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from e

    seed = _int(values, "seed")
    if seed < 0:
        raise ConfigError("seed muss nichtnegativ sein")
    mc_seed = seed if str(values["mc.seed"]).strip() == "" else _int(values, "mc.seed")
    try:
        mc = McConfig(_int(values, "mc.iterations"), _int(values, "mc.successes"), mc_seed)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    provider = str(values["provider"]).strip().lower()
    if provider not in PROVIDERS:
        raise ConfigError(f"provider: {provider!r} nicht in {', '.join(PROVIDERS)}")
    policy = str(values["control.policy"]).strip().lower()
    try:
        kind = PolicyKind(policy)
    except ValueError:
        raise ConfigError(f"control.policy: unbekannte Policy {policy!r}") from None
    if kind is PolicyKind.HQEA:
        raise ConfigError("control.policy: hqea ist reserviert, aber nicht implementiert")
    if kind is PolicyKind.TWO_RATE and lam % 2:
        raise ConfigError("control.policy=two-rate braucht ein gerades ea.lambda")

    p_min = parse_rate(values["control.p_min"], n, "control.p_min")
    p_max = parse_rate(values["control.p_max"], n, "control.p_max")
    if not 0.0 <= p_min <= p_max <= 1.0:
        raise ConfigError(f"control: ungültige Grenzen p_min={p_min}, p_max={p_max}")
    p_init_raw = str(values["control.p_init"]).strip()
    p_init = None if p_init_raw == "" else parse_rate(p_init_raw, n, "control.p_init")

    init_raw = str(values["simulate.initial_fitness"]).strip()
    initial_fitness = None if init_raw == "" else _int(values, "simulate.initial_fitness")
    if initial_fitness is not None and not problem.f_min <= initial_fitness <= problem.f_max:
        raise ConfigError(f"simulate.initial_fitness={initial_fitness} außerhalb des Fitnessbereichs")

    runs, budget, workers = (_int(values, k) for k in ("simulate.runs", "simulate.budget", "workers"))
    if runs < 1 or budget < 1 or workers < 1:
        raise ConfigError("simulate.runs, simulate.budget und workers müssen positiv sein")

    return RunConfig(
        problem_name=name, n=n, lam=lam, lambdas=parse_lambdas(values["ea.lambdas"]),
        grid=grid, mc=mc, provider=provider, policy=kind.value, p_min=p_min, p_max=p_max,
        p_init=p_init, clamp_offspring=_bool(values, "tworate.clamp_offspring"),
        runs=runs, budget=budget, initial_fitness=initial_fitness,
        out_dir=Path(str(values["out_dir"])), workers=workers, seed=seed,
    )


def load(path=None, overrides: Optional[dict] = None) -> RunConfig:
    layers = []
    if path is not None:
        layers.append(load_file(path))
    if overrides:
        layers.append(overrides)
    cfg = build(merge(*layers))
    logger.debug("Konfiguration: %s", cfg)
    return cfg
