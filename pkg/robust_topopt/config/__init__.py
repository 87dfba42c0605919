import copy
import dataclasses
import logging
from importlib import resources
from typing import Any, Dict, Iterable, Optional

import yaml

from .run_config import (
    ALIASES,
    SECTIONS,
    BarrierSettings,
    ConfigError,
    ContinuationConfig,
    FilterConfig,
    LoadConfig,
    MaterialConfig,
    MeshConfig,
    OptimizerConfig,
    OutputConfig,
    RunConfig,
    UncertaintyConfig,
    load_run_config,
    load_section,
    normalize_key,
)

log = logging.getLogger(__name__)


class UniqueKeyLoader(yaml.SafeLoader):
    """
    Safe YAML loader that refuses mappings with repeated keys
    """

    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=deep)
            if key in seen:
                raise ConfigError(f"Duplicate config key: {key} (line {key_node.start_mark.line + 1})")
            seen.add(key)
        return super().construct_mapping(node, deep=deep)


def read_yaml(stream) -> Dict[str, Any]:
    try:
        content = yaml.load(stream, Loader=UniqueKeyLoader)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse configuration: {e}") from e
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigError("configuration root must be a mapping")
    return content


def _resource(name: str):
    path = resources.files("robust_topopt").joinpath("resources").joinpath(name)
    return path.open("r") if path.is_file() else None


def merge_config(base: Dict[str, Any], overlay: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        key = normalize_key(key)
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _normalized(tree: Dict[str, Any]) -> Dict[str, Any]:
    return merge_config({}, tree)


def apply_override(tree: Dict[str, Any], assignment: str) -> Dict[str, Any]:
    """
    Apply one ``section.key=value`` (or ``alias=value``) assignment; the value is parsed as YAML
    """
    if "=" not in assignment:
        raise ConfigError(f"Override must have the form key=value: {assignment!r}")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    path = ALIASES.get(key, key)
    parts = [normalize_key(part) for part in path.split(".")]
    if parts[0] in ("seed", "preset") and len(parts) == 1:
        pass
    elif len(parts) != 2 or parts[0] not in SECTIONS:
        raise ConfigError(f"Unknown config key: {key}")
    value = read_yaml_scalar(raw)
    if len(parts) == 2 and _field_type(parts[0], parts[1]) is str:
        # "off" and friends stay strings for text fields
        value = raw.strip()
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return tree


def _field_type(section: str, name: str):
    for f in dataclasses.fields(SECTIONS[section]):
        if f.name == name:
            return f.type
    return None


def read_yaml_scalar(raw: str) -> Any:
    try:
        return yaml.load(raw, Loader=UniqueKeyLoader)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse override value {raw!r}: {e}") from e


def load_config_tree(env_parameter: Optional[str] = None, config_path: Optional[str] = None,
                     overrides: Iterable[str] = ()) -> Dict[str, Any]:
    with _resource("application.yaml") as stream:
        tree = _normalized(read_yaml(stream))

    if env_parameter:
        stream = _resource(f"application-{env_parameter}.yaml")
        if stream is None:
            log.warning(f"Cannot find application-{env_parameter}.yaml. Trying to load it as a full path")
            try:
                stream = open(env_parameter)
            except FileNotFoundError:
                raise ConfigError(f"Cannot read configuration preset: {env_parameter}")
        with stream:
            tree = merge_config(tree, read_yaml(stream))
        tree["preset"] = env_parameter

    if config_path:
        try:
            with open(config_path) as stream:
                tree = merge_config(tree, read_yaml(stream))
        except FileNotFoundError:
            raise ConfigError(f"Configuration file not found: {config_path}")

    for assignment in overrides:
        tree = apply_override(tree, assignment)
    return tree


def load_config_env(env_parameter: Optional[str] = None, config_path: Optional[str] = None,
                    overrides: Iterable[str] = ()) -> RunConfig:
    """
    Resolve the run configuration: packaged defaults, then the preset, the config file and
    the ``key=value`` overrides, each layer over the previous one

    Parameters
    ----------
    env_parameter:
        Preset name (``resources/application-<name>.yaml``) or a path to a YAML file
    config_path:
        User configuration file
    overrides:
        Assignments ``section.key=value`` or ``alias=value`` (e.g. ``V=0.4``)
    """
    overrides = list(overrides)
    tree = load_config_tree(env_parameter, config_path, overrides)
    try:
        return load_run_config(tree)
    except ConfigError as e:
        # Report errors on aliased fields under the name the user typed
        for assignment in overrides:
            key = assignment.split("=", 1)[0].strip()
            if key in ALIASES and ALIASES[key] in str(e):
                raise ConfigError(f"{e} [{key}]") from e
        raise


def parse_config(path: Optional[str] = None, overrides: Iterable[str] = (),
                 preset: Optional[str] = None) -> RunConfig:
    return load_config_env(preset, path, overrides)
