"""Run configuration: a nested key-value YAML file plus dotted-path overrides.

Each command owns a defaults tree; a config file (if given) is deep-merged
over it and ``--set a.b.c=value`` flags are applied last.  The fully
resolved tree goes into the run manifest, so a run is reproducible from its
manifest alone.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .errors import ConfigError

__all__ = ["load_config", "resolve", "deep_merge", "apply_override"]


def deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_scalar(text: str):
    value = yaml.safe_load(text)
    if isinstance(value, str):
        # YAML leaves exponent forms like 1e12 as strings; overrides mean
        # numbers when they look like numbers
        try:
            return int(value)
        except ValueError:
            pass
        try:
            return float(value)
        except ValueError:
            pass
    return value


def apply_override(tree: dict, dotted: str) -> dict:
    if "=" not in dotted:
        raise ConfigError(f"override {dotted!r} must look like key.path=value")
    path, value = dotted.split("=", 1)
    keys = path.strip().split(".")
    node = tree
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    node[keys[-1]] = _parse_scalar(value)
    return tree


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"config file {p} is not valid YAML: {err}") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {p} must hold a mapping at top level")
    return data


def resolve(defaults: dict, config_path, overrides, seed: int | None) -> dict:
    tree = deep_merge(defaults, load_config(config_path))
    for ov in overrides or ():
        apply_override(tree, ov)
    if seed is not None:
        tree["seed"] = int(seed)
    return tree
