import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional
from config import Config
from utils.errors import ConfigurationError
from utils.files import write_json_atomic

ALGORITHMS = ('sgd', 'rtrl', 'uoro', 'nobacktrack', 'tbptt', 'adam', 'rmsprop', 'ong')

# Keys that define the problem; the algorithm is left out so arms on one problem share a hash
PROBLEM_KEYS = ('system', 'schedule', 'sampling', 'trunc', 'horizon', 'theta0')


@dataclass
class ExperimentConfig:
    name: str
    system: Dict[str, Any]
    algorithm: str = 'rtrl'
    schedule: Dict[str, float] = field(default_factory=lambda: {'gamma': 0.1, 'b': 0.7})
    sampling: str = 'cycling'
    rule: Optional[str] = None
    rule_options: Dict[str, Any] = field(default_factory=dict)
    param_op: Any = 'plain'
    trunc: Dict[str, Any] = field(default_factory=dict)
    exponents: Dict[str, float] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=lambda: [0])
    horizon: int = 1000
    theta0: Optional[List[float]] = None
    output_dir: Optional[str] = None
    arms: List[Dict[str, Any]] = field(default_factory=list)
    grid: Dict[str, List[Any]] = field(default_factory=dict)
    tol: float = Config.CONVERGENCE_TOL
    window: int = Config.CONVERGENCE_WINDOW
    force: bool = False

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("Experiment config needs a name")
        if 'kind' not in self.system:
            raise ConfigurationError(f"Experiment '{self.name}': system needs a 'kind'")
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"Experiment '{self.name}': unknown algorithm '{self.algorithm}', expected one of {ALGORITHMS}")
        if not {'gamma', 'b'} <= set(self.schedule):
            raise ConfigurationError(f"Experiment '{self.name}': schedule needs 'gamma' and 'b'")
        if int(self.horizon) < 1:
            raise ConfigurationError(f"Experiment '{self.name}': horizon must be >= 1, got {self.horizon}")
        if not self.seeds:
            raise ConfigurationError(f"Experiment '{self.name}': at least one seed is required")
        for arm in self.arms:
            if 'name' not in arm:
                raise ConfigurationError(f"Experiment '{self.name}': every arm needs a 'name'")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown config keys {sorted(unknown)}")
        try:
            return cls(**copy.deepcopy(data))
        except TypeError as e:
            raise ConfigurationError(f"Invalid experiment config: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def load(cls, path: str) -> 'ExperimentConfig':
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read experiment config {path}: {e}") from e
        try:
            return cls.from_dict(data)
        except ConfigurationError as e:
            raise ConfigurationError(f"{path}: {e}") from e

    def save(self, path: str) -> str:
        return write_json_atomic(self.to_dict(), path)

    def override(self, key: str, value: Any) -> 'ExperimentConfig':
        """Copy with a dotted key (e.g. 'schedule.b') set to value"""
        data = self.to_dict()
        target = data
        parts = key.split('.')
        for part in parts[:-1]:
            node = target.get(part)
            if node is None:
                node = target[part] = {}
            if not isinstance(node, dict):
                raise ConfigurationError(f"Cannot override '{key}': '{part}' is not a section")
            target = node
        target[parts[-1]] = copy.deepcopy(value)
        return ExperimentConfig.from_dict(data)

    def with_overrides(self, overrides: Dict[str, Any]) -> 'ExperimentConfig':
        cfg = self
        for key, value in overrides.items():
            cfg = cfg.override(key, value)
        return cfg

    def arm_names(self) -> List[str]:
        return [arm['name'] for arm in self.arms] or [self.algorithm]

    def for_arm(self, name: str) -> 'ExperimentConfig':
        """The config of one arm: its dotted overrides applied, arms and grid cleared"""
        overrides = {}
        if self.arms:
            matches = [arm for arm in self.arms if arm['name'] == name]
            if not matches:
                raise ConfigurationError(f"Experiment '{self.name}' has no arm '{name}'")
            overrides = {k: v for k, v in matches[0].items() if k != 'name'}
        cfg = self.with_overrides(overrides)
        return cfg.with_overrides({'arms': [], 'grid': {}})

    def problem_dict(self, seed: int) -> Dict[str, Any]:
        data = {key: getattr(self, key) for key in PROBLEM_KEYS}
        data['seed'] = int(seed)
        return data

    def config_hash(self, seed: int) -> str:
        """SHA-256 of the canonical JSON of the problem for one seed"""
        canonical = json.dumps(self.problem_dict(seed), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def parse_value(text: str) -> Any:
    """CLI override value: JSON when it parses, the raw string otherwise"""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_assignments(items: Optional[List[str]]) -> Dict[str, Any]:
    """['schedule.b=0.5', ...] -> {'schedule.b': 0.5, ...}"""
    overrides = {}
    for item in items or []:
        if '=' not in item:
            raise ConfigurationError(f"Override '{item}' must look like key=value")
        key, text = item.split('=', 1)
        overrides[key.strip()] = parse_value(text.strip())
    return overrides
