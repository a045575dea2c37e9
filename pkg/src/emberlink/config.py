"""Flat key=value run configuration with dotted namespaces.

Every key has a documented default (below); unknown keys are rejected so
typos fail fast.  `resolved()` returns the fully-filled mapping that run
directories echo for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

# key -> (default value or None when optional, parser)
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(s: str) -> bool:
    try:
        return _BOOL[s.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {s!r}") from None


KNOWN_KEYS: dict[str, tuple] = {
    "paths.left": (None, str),
    "paths.right": (None, str),
    "paths.matches": (None, str),
    "paths.embeddings": (None, str),
    "paths.model": (None, str),
    "paths.out": ("run", str),
    "data.id_column": ("id", str),
    "compose.method": ("avg", str),
    "compose.hidden_dim": (150, int),
    "sim.kind": ("cosine", str),
    "train.learning_rate": (0.01, float),
    "train.epochs": (20, int),
    "train.batch_size": (16, int),
    "train.l2": (0.001, float),
    "train.neg_ratio": (4, int),
    "train.folds": (5, int),
    "train.noise_fraction": (0.0, float),
    "train.fine_tune_embeddings": (False, _parse_bool),
    "train.embedding_update_rate": (0.01, float),
    "train.head_hidden": (50, int),
    "lsh.k": (8, int),
    "lsh.l": (2, int),
    "lsh.probe_radius": (0, int),
    "lsh.top_n": (0, int),
    "tune.p1": (None, float),
    "tune.p2": (None, float),
    "tune.n": (None, int),
    "retrofit.enabled": (False, _parse_bool),
    "retrofit.alpha": (1.0, float),
    "retrofit.beta": (1.0, float),
    "retrofit.iterations": (10, int),
    "retrofit.init_neighbors": (5, int),
    "seed": (0, int),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, key: str):
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        default, parser = KNOWN_KEYS[key]
        if key in self.values:
            raw = self.values[key]
            try:
                return parser(raw)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        return default

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"config key {key!r} is required for this command")
        return value

    def set(self, key: str, value) -> None:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        self.values[key] = str(value)

    def resolved(self) -> dict[str, str]:
        """All keys with defaults filled; optional unset keys are omitted."""
        out = {}
        for key, (default, _) in KNOWN_KEYS.items():
            if key in self.values:
                out[key] = self.values[key]
            elif default is not None:
                out[key] = str(default)
        return out


def parse_config_text(text: str) -> RunConfig:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return RunConfig(values=values)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


def write_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key, value in sorted(cfg.resolved().items()):
            f.write(f"{key} = {value}\n")
