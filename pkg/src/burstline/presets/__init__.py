"""Bundled presets: a reference scenario and the two environment models.

Presets resolve from the package's data directory unless the
BURSTLINE_PRESET_DIR environment variable points somewhere else, in
which case that directory is authoritative and a missing file there is
an error rather than a silent fallback.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

from ..errors import ScenarioError
from ..perfmodel import LogLawModel, parse_model
from ..scenario import Scenario, parse_scenario

PRESET_DIR_ENV = "BURSTLINE_PRESET_DIR"

SCENARIO_PRESETS = {
    "table2": "table2.toml",
}
MODEL_PRESETS = {
    "paper-cluster": "paper-cluster.model",
    "paper-cloud": "paper-cloud.model",
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted({**SCENARIO_PRESETS, **MODEL_PRESETS}))


def _read_preset(filename: str) -> str:
    override = os.environ.get(PRESET_DIR_ENV)
    if override:
        path = Path(override) / filename
        try:
            return path.read_text()
        except OSError as exc:
            raise ScenarioError(
                f"preset file {path} not readable ({PRESET_DIR_ENV} is set): {exc}"
            ) from exc
    return resources.files("burstline.presets").joinpath(filename).read_text()


def load_preset_scenario(name: str) -> Scenario:
    if name not in SCENARIO_PRESETS:
        known = ", ".join(sorted(SCENARIO_PRESETS))
        raise KeyError(f"unknown scenario preset {name!r}; bundled: {known}")
    return parse_scenario(_read_preset(SCENARIO_PRESETS[name]))


def load_preset_model(name: str) -> LogLawModel:
    if name not in MODEL_PRESETS:
        known = ", ".join(sorted(MODEL_PRESETS))
        raise KeyError(f"unknown model preset {name!r}; bundled: {known}")
    model = parse_model(_read_preset(MODEL_PRESETS[name]))
    if not isinstance(model, LogLawModel):
        raise ScenarioError(f"preset {name!r} does not hold a log law model")
    return model
