"""Loading and validation of scenario run configurations.

Configurations are TOML files describing a single scenario run: which
scenario to build, the seed for every derived random stream, optional
geometry overrides (radius, tree radius), the combing family to use, and
an optional list of certification checks that replaces the scenario's
default check list.

A minimal file looks like::

    scenario = "wedge-cycles"
    seed = 7

    [[checks]]
    check = "quasigeodesic"
    lam = 1
    k = 0

The seed is mandatory: every sampled plan derives its generator from it,
and runs with the same configuration must produce identical reports.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

COMBING_KINDS = ("canonical", "transported-equivariant")

_TOP_LEVEL_KEYS = {
    "scenario",
    "seed",
    "out_dir",
    "radius",
    "tree_radius",
    "combing",
    "jobs",
    "checks",
    "params",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated contents of one scenario configuration.

    ``checks`` is a tuple of plain dicts (one per requested check); an
    empty tuple means "use the scenario's default checks".  ``params``
    holds scenario-specific knobs that the builder interprets.
    """

    scenario: str
    seed: str
    out_dir: str = None
    radius: int = None
    tree_radius: int = None
    combing: str = "canonical"
    jobs: int = 1
    checks: tuple = ()
    params: dict = dataclasses.field(default_factory=dict)
    source: str = None

    def replace(self, **kwargs) -> "ScenarioConfig":
        return dataclasses.replace(self, **kwargs)


def _require_positive_int(value, key):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError("%r must be a positive integer, got %r" % (key, value))
    return value


def config_from_dict(data, source=None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed TOML table."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a table")
    unknown = sorted(set(data) - _TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError("unknown configuration keys: %s" % ", ".join(unknown))

    scenario = data.get("scenario")
    if not isinstance(scenario, str) or not scenario:
        raise ConfigError("'scenario' is required and must be a nonempty string")

    if "seed" not in data:
        raise ConfigError("'seed' is required; seedless runs are not reproducible")
    seed = data["seed"]
    if isinstance(seed, bool) or not isinstance(seed, (int, str)):
        raise ConfigError("'seed' must be an integer or a string, got %r" % (seed,))
    seed = str(seed)

    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("'out_dir' must be a string")

    radius = data.get("radius")
    if radius is not None:
        radius = _require_positive_int(radius, "radius")
    tree_radius = data.get("tree_radius")
    if tree_radius is not None:
        tree_radius = _require_positive_int(tree_radius, "tree_radius")

    combing = data.get("combing", "canonical")
    if combing not in COMBING_KINDS:
        raise ConfigError(
            "'combing' must be one of %s, got %r" % (", ".join(COMBING_KINDS), combing)
        )

    jobs = data.get("jobs", 1)
    jobs = _require_positive_int(jobs, "jobs")

    raw_checks = data.get("checks", [])
    if not isinstance(raw_checks, list):
        raise ConfigError("'checks' must be an array of tables")
    checks = []
    for i, entry in enumerate(raw_checks):
        if not isinstance(entry, dict):
            raise ConfigError("checks[%d] must be a table" % i)
        if not isinstance(entry.get("check"), str):
            raise ConfigError("checks[%d] needs a 'check' name" % i)
        checks.append(dict(entry))

    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be a table")

    return ScenarioConfig(
        scenario=scenario,
        seed=seed,
        out_dir=out_dir,
        radius=radius,
        tree_radius=tree_radius,
        combing=combing,
        jobs=jobs,
        checks=tuple(checks),
        params=dict(params),
        source=source,
    )


def load_config(path) -> ScenarioConfig:
    """Parse a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read configuration %s: %s" % (path, exc))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("invalid TOML in %s: %s" % (path, exc))
    return config_from_dict(data, source=str(path))
