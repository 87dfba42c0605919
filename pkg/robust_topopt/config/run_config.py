import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union, get_args, get_origin


class ConfigError(ValueError):
    pass


def _bounded(low: Optional[float] = None, high: Optional[float] = None, low_open: bool = False,
             high_open: bool = False, choices: Optional[tuple] = None, **kwargs):
    return field(metadata={"low": low, "high": high, "low_open": low_open, "high_open": high_open,
                           "choices": choices}, **kwargs)


def _bound_text(meta: Dict[str, Any]) -> str:
    low = "-inf" if meta["low"] is None else f"{meta['low']:g}"
    high = "inf" if meta["high"] is None else f"{meta['high']:g}"
    left = "(" if meta["low"] is None or meta["low_open"] else "["
    right = ")" if meta["high"] is None or meta["high_open"] else "]"
    return f"{left}{low}, {high}{right}"


@dataclass
class MeshConfig:
    nx: int = _bounded(1)
    ny: int = _bounded(1)
    width: float = _bounded(0, low_open=True)
    height: float = _bounded(0, low_open=True)


@dataclass
class LoadConfig:
    start: float = _bounded(0)
    end: float = _bounded(0)
    magnitude: float = _bounded(0, low_open=True)
    direction: str = _bounded(choices=("-y", "+y", "-x", "+x"))


@dataclass
class MaterialConfig:
    E0: float = _bounded(0, low_open=True)
    E_D: float = _bounded(0, low_open=True)
    nu: float = _bounded(0, 0.5, high_open=True)
    p: float = _bounded(1)


@dataclass
class FilterConfig:
    radius: float = _bounded(0, low_open=True)


@dataclass
class UncertaintyConfig:
    kind: str = _bounded(choices=("linear", "rho-weighted", "average-quadratic"))
    budgets: List[float] = _bounded(0, 1, high_open=True)
    mean_budget: float = _bounded(0, 1, low_open=True, high_open=True)
    anchor: float = _bounded(0, 1, low_open=True, high_open=True)
    weighting: str = _bounded(choices=("plain", "rho"))


@dataclass
class BarrierSettings:
    mu_init: float = _bounded(0, low_open=True)
    mu_target: float = _bounded(0, low_open=True)
    mu_factor: float = _bounded(0, 1, low_open=True, high_open=True)
    tol: float = _bounded(0, low_open=True)
    constr_viol_tol: float = _bounded(0, low_open=True)
    compl_inf_tol: float = _bounded(0, low_open=True)
    acceptable_tol: float = _bounded(0, low_open=True)
    max_iter: int = _bounded(1)
    accept_acceptable: bool = _bounded(default=False)


@dataclass
class OptimizerConfig:
    volume_fraction: float = _bounded(0, 1, low_open=True)
    rho_min: float = _bounded(0, 1, low_open=True, high_open=True)
    max_iter: int = _bounded(1)
    change_tol: float = _bounded(0, low_open=True)
    move: float = _bounded(0, 1, low_open=True)
    tikhonov: Optional[float] = _bounded(0, low_open=True, default=None)


@dataclass
class ContinuationConfig:
    mode: str = _bounded(choices=("off", "check", "optimize"))
    steps: int = _bounded(2)


@dataclass
class OutputConfig:
    directory: str = _bounded()
    plot: bool = _bounded(default=False)
    dump_results: bool = _bounded(default=False)


@dataclass
class RunConfig:
    mesh: MeshConfig
    load: LoadConfig
    material: MaterialConfig
    filter: FilterConfig
    uncertainty: UncertaintyConfig
    barrier: BarrierSettings
    optimizer: OptimizerConfig
    continuation: ContinuationConfig
    output: OutputConfig
    seed: int = 0
    preset: str = "cantilever"

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


SECTIONS = {
    "mesh": MeshConfig,
    "load": LoadConfig,
    "material": MaterialConfig,
    "filter": FilterConfig,
    "uncertainty": UncertaintyConfig,
    "barrier": BarrierSettings,
    "optimizer": OptimizerConfig,
    "continuation": ContinuationConfig,
    "output": OutputConfig,
}

# Short names of the benchmark notation
ALIASES = {
    "V": "optimizer.volume_fraction",
    "rho_min": "optimizer.rho_min",
    "maxIter": "optimizer.max_iter",
    "epsilon": "optimizer.tikhonov",
    "D": "uncertainty.budgets",
    "D1": "uncertainty.mean_budget",
    "D2": "uncertainty.budgets",
    "m": "uncertainty.anchor",
    "p": "material.p",
    "nu": "material.nu",
    "E0": "material.E0",
    "E_D": "material.E_D",
    "R": "filter.radius",
}


def normalize_key(key: str) -> str:
    return str(key).replace("-", "_")


def _coerce(name: str, value: Any, annotation) -> Any:
    origin = get_origin(annotation)
    if origin is Union:
        inner = [a for a in get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _coerce(name, value, inner[0])
    if origin in (list, List):
        item_type = get_args(annotation)[0]
        items = value if isinstance(value, (list, tuple)) else [value]
        return [_coerce(name, item, item_type) for item in items]
    if annotation is bool:
        if isinstance(value, bool):
            return value
    elif annotation is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif annotation is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif annotation is str:
        if isinstance(value, (str, int, float)) and not isinstance(value, bool):
            return str(value)
    raise ConfigError(f"{name}: expected {getattr(annotation, '__name__', annotation)}, "
                      f"got {type(value).__name__} ({value!r})")


def _check_bounds(name: str, value: Any, meta: Dict[str, Any]):
    if value is None:
        return
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{name}: at least one value is required")
        for item in value:
            _check_bounds(name, item, meta)
        return
    choices = meta.get("choices")
    if choices is not None and value not in choices:
        raise ConfigError(f"{name}={value!r} is not one of {', '.join(choices)}")
    low, high = meta.get("low"), meta.get("high")
    if isinstance(value, str) or (low is None and high is None):
        return
    below = low is not None and (value <= low if meta["low_open"] else value < low)
    above = high is not None and (value >= high if meta["high_open"] else value > high)
    if below or above:
        raise ConfigError(f"{name}={value} is out of bounds {_bound_text(meta)}")


def load_section(cls, section: str, values: Optional[Dict[str, Any]]):
    """
    Build one config section from its mapping, rejecting unknown and missing keys
    """
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(values).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        name = normalize_key(key)
        if name not in fields:
            raise ConfigError(f"Unknown config key: {section}.{key}")
        kwargs[name] = _coerce(f"{section}.{name}", value, fields[name].type)
        _check_bounds(f"{section}.{name}", kwargs[name], fields[name].metadata)
    for name, f in fields.items():
        required = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if required and name not in kwargs:
            raise ConfigError(f"Missing required config field: {section}.{name}")
    return cls(**kwargs)


def _check_consistency(config: RunConfig):
    mesh, load, material, opt = config.mesh, config.load, config.material, config.optimizer
    if not load.start < load.end:
        raise ConfigError(f"load.start={load.start} must be below load.end={load.end}")
    if load.end > mesh.width:
        raise ConfigError(f"load.end={load.end} is out of bounds [0, {mesh.width:g}] (mesh.width)")
    if not material.E_D < material.E0:
        raise ConfigError(f"material.E_D={material.E_D} is out of bounds (0, {material.E0:g}) (must be below E0)")
    if opt.rho_min > opt.volume_fraction:
        raise ConfigError(f"optimizer.rho_min={opt.rho_min} is out of bounds (0, {opt.volume_fraction:g}] "
                          f"(must not exceed the volume fraction)")
    barrier = config.barrier
    if barrier.mu_target > barrier.mu_init:
        raise ConfigError(f"barrier.mu_target={barrier.mu_target} is out of bounds (0, {barrier.mu_init:g}] "
                          f"(must not exceed mu_init)")


def load_run_config(configuration: Dict[str, Any]) -> RunConfig:
    """
    Build and validate the full run configuration from a merged YAML tree
    """
    if not isinstance(configuration, dict):
        raise ConfigError("configuration root must be a mapping")
    sections = {}
    extra = {}
    for key, values in configuration.items():
        name = normalize_key(key)
        if name in SECTIONS:
            sections[name] = load_section(SECTIONS[name], name, values)
        elif name == "seed":
            extra["seed"] = _coerce("seed", values, int)
            _check_bounds("seed", extra["seed"], {"low": 0, "high": None, "low_open": False, "high_open": False})
        elif name == "preset":
            extra["preset"] = _coerce("preset", values, str)
        else:
            raise ConfigError(f"Unknown config key: {key}")
    for name in SECTIONS:
        if name not in sections:
            raise ConfigError(f"Missing required config section: {name}")
    config = RunConfig(**sections, **extra)
    _check_consistency(config)
    return config
