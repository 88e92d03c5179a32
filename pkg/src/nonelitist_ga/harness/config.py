"""Experiment specifications: flat ``key = value`` files plus flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..core import InvalidInputError


class SpecError(InvalidInputError):
    """Invalid experiment specification; ``errors`` maps field names to messages."""

    def __init__(self, errors: dict[str, str]) -> None:
        self.errors = errors
        super().__init__("; ".join(f"{k}: {v}" for k, v in errors.items()))


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text in (None, "", "none") else int(text)


def _opt_float(text):
    return None if text in (None, "", "none") else float(text)


def _int_or_word(*words):
    def conv(text):
        if text is None:
            return None
        t = str(text).strip().lower()
        return t if t in words else int(t)
    return conv


def _float_or_word(*words):
    def conv(text):
        if text is None:
            return None
        t = str(text).strip().lower()
        return t if t in words else float(t)
    return conv


def _rate(text):
    """Mutation rate: a number, 'auto', or a fraction of n such as '1/n' or '2/n'."""
    t = str(text).strip().lower().replace(" ", "")
    if t == "auto":
        return t
    if t.endswith("/n"):
        float(t[:-2])
        return t
    return float(t)


_CONVERTERS = {
    "experiment_id": str,
    "problem": str,
    "n": int,
    "p": _opt_int,
    "lam": _int_or_word("auto"),
    "selection": str,
    "k": _int_or_word("auto"),
    "mu": _opt_int,
    "alpha": float,
    "nu": _float_or_word("auto"),
    "crossover": str,
    "pc": float,
    "r": int,
    "mutation": str,
    "pm": _rate,
    "partition": str,
    "radius": int,
    "t_max": _int_or_word("m", "none"),
    "multistart": _bool,
    "trials": int,
    "seed": int,
    "max_evaluations": int,
    "confidence": float,
    "csv": lambda t: t or None,
    "json": lambda t: t or None,
    "workers": int,
    "bound": _opt_float,
    "epsilon": _opt_float,
    "s_star": _opt_float,
    "s_trials": int,
}

# config-file / flag name -> attribute name
ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    n: int
    p: int | None = None
    lam: int | str = "auto"
    selection: str = "tournament"
    k: int | str = "auto"
    mu: int | None = None
    alpha: float = 1.0
    nu: float | str = "auto"
    crossover: str = "single-point"
    pc: float = 1.0
    r: int = 2
    mutation: str = "bitwise"
    pm: float | str = "1/n"
    partition: str = "canonical"
    radius: int = 1
    t_max: int | str | None = None
    multistart: bool = False
    trials: int = 100
    seed: int = 0
    max_evaluations: int = 10 ** 9
    confidence: float = 0.99
    experiment_id: str = "exp"
    csv: str | None = None
    json: str | None = None
    workers: int = 1
    bound: float | None = None
    epsilon: float | None = None
    s_star: float | None = None
    s_trials: int = 4000

    def __post_init__(self) -> None:
        errors = {}
        if self.n < 1:
            errors["n"] = "must be >= 1"
        if self.trials < 1:
            errors["trials"] = "must be >= 1"
        if not 0 < self.confidence < 1:
            errors["confidence"] = "must lie in (0, 1)"
        if self.r not in (1, 2):
            errors["r"] = "must be 1 or 2"
        if not 0 <= self.pc <= 1:
            errors["pc"] = "must lie in [0, 1]"
        if not self.alpha > 0:
            errors["alpha"] = "must be positive"
        if self.partition not in ("canonical", "local-optima"):
            errors["partition"] = "must be canonical or local-optima"
        if self.workers < 1:
            errors["workers"] = "must be >= 1"
        if errors:
            raise SpecError(errors)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = "lambda" if f.name == "lam" else f.name
            out[key] = getattr(self, f.name)
        return out

    def with_overrides(self, **values) -> ExperimentSpec:
        return build_spec(values, base=self)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError({f"line {lineno}": f"expected key = value, got {raw!r}"})
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def build_spec(values: dict, base: ExperimentSpec | None = None) -> ExperimentSpec:
    """Convert raw key/value strings to an ExperimentSpec, collecting all field errors."""
    errors = {}
    converted = {}
    for key, raw in values.items():
        name = ALIASES.get(key, key)
        if name not in _CONVERTERS:
            errors[key] = "unknown key"
            continue
        if raw is None:
            continue
        try:
            converted[name] = _CONVERTERS[name](raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            errors[key] = str(exc)
    if errors:
        raise SpecError(errors)
    if base is not None:
        return replace(base, **converted)
    for required in ("problem", "n"):
        if required not in converted:
            errors[required] = "required"
    if errors:
        raise SpecError(errors)
    return ExperimentSpec(**converted)


def load_spec(path: str | Path, overrides: dict | None = None) -> ExperimentSpec:
    values = parse_config_text(Path(path).read_text())
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_spec(values)


CONFIG_KEYS = tuple("lambda" if k == "lam" else k for k in _CONVERTERS)
