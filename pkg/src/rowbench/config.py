"""Benchmark run configuration: a schema-versioned YAML document, parsed strictly.

Example::

    schema_version: 1
    output_dir: runs/demo
    seeds: [0, 1, 2]
    crops:
      - zucchini
      - name: zucchini_flat
        preset: zucchini
        terrain: {delta_h: 0.0}
    episode:
      path_length: 20.0
      drift_sigma: 0.3
      corruption: {flip_prob: 0.01}
    disturbances:
      - name: offset
        start_lateral_offset: 0.3
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .controller import ControllerConfig
from .errors import ConfigError, RowBenchError, UnknownPreset
from .field_gen import FieldParams, preset
from .mask_oracle import (DEFAULT_HEIGHT, DEFAULT_HFOV, DEFAULT_MAX_RANGE, DEFAULT_MOUNT_HEIGHT,
                          DEFAULT_WIDTH, CameraModel, CorruptionParams)
from .serialize import from_plain, to_plain
from .sim import EpisodeConfig

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "output_dir", "seeds", "crops", "episode", "disturbances"}


@dataclass(frozen=True)
class CameraSettings:
    width_px: int = DEFAULT_WIDTH
    height_px: int = DEFAULT_HEIGHT
    hfov: float = DEFAULT_HFOV
    mount_height: float = DEFAULT_MOUNT_HEIGHT
    pitch: float = 0.0
    roll: float = 0.0
    max_range: float = DEFAULT_MAX_RANGE

    def camera(self) -> CameraModel:
        return CameraModel(width_px=self.width_px, height_px=self.height_px, hfov=self.hfov,
                           position=(0.0, 0.0, self.mount_height), pitch=self.pitch,
                           roll=self.roll, max_range=self.max_range)


@dataclass(frozen=True)
class EpisodeSettings:
    """Everything in an episode except the field and the seed."""

    path_length: float = 20.0
    dt: float = 0.05
    control_period: float = 0.1
    goal_radius: float = 0.5
    timeout: float = 120.0
    rover_radius: float = 0.30
    drift_sigma: float = 0.3
    start_lateral_offset: float = 0.0
    start_yaw_offset: float = 0.0
    corridor_index: int | None = None
    empty_field: bool = False
    obstacle_mode: str = "drift"
    obstacle_bump: float = 1.0
    controller: ControllerConfig = ControllerConfig()
    corruption: CorruptionParams = CorruptionParams()
    camera: CameraSettings = CameraSettings()

    def episode(self, params: FieldParams, seed: int) -> EpisodeConfig:
        d = {k: getattr(self, k) for k in (
            "path_length", "dt", "control_period", "goal_radius", "timeout", "rover_radius",
            "drift_sigma", "start_lateral_offset", "start_yaw_offset", "corridor_index",
            "empty_field", "obstacle_mode", "obstacle_bump", "controller", "corruption")}
        return EpisodeConfig(field=params, seed=seed, camera=self.camera.camera(), **d)


@dataclass(frozen=True)
class Disturbance:
    name: str
    episode: EpisodeSettings


@dataclass(frozen=True)
class RunConfig:
    crops: tuple[FieldParams, ...]
    seeds: tuple[int, ...]
    episode: EpisodeSettings = EpisodeSettings()
    disturbances: tuple[Disturbance, ...] = ()
    output_dir: str = "runs"
    schema_version: int = SCHEMA_VERSION

    def matrix(self) -> list[tuple[str, int, str, EpisodeConfig]]:
        """Every (crop, seed, disturbance) cell, sorted by crop then seed."""
        dists = self.disturbances or (Disturbance("", self.episode),)
        cells = []
        for params in self.crops:
            for seed in self.seeds:
                for d in dists:
                    cells.append((params.crop_name, seed, d.name, d.episode.episode(params, seed)))
        order = {d.name: i for i, d in enumerate(dists)}
        cells.sort(key=lambda c: (c[0], c[1], order[c[2]]))
        return cells

    def to_plain(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "output_dir": self.output_dir,
            "seeds": list(self.seeds),
            "crops": [{"name": p.crop_name, **{k: v for k, v in to_plain(p).items() if k != "crop_name"}}
                      for p in self.crops],
            "episode": to_plain(self.episode),
            "disturbances": [{"name": d.name, **to_plain(d.episode)} for d in self.disturbances],
        }


class _StrictLoader(yaml.SafeLoader):
    pass


def _no_duplicates(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} at line {key_node.start_mark.line + 1}")
        seen.add(key)
    return loader.construct_mapping(node, deep)


_StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _no_duplicates)


def _crop(entry, i: int) -> FieldParams:
    where = f"crops[{i}]"
    if isinstance(entry, str):
        try:
            return preset(entry)
        except UnknownPreset:
            raise ConfigError(f"{where}: unknown crop {entry!r} (not a preset, not defined inline)") from None
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a preset name or a mapping")
    data = dict(entry)
    name = data.pop("name", None)
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{where}: inline crop needs a 'name'")
    if "crop_name" in data:
        raise ConfigError(f"{where}: use 'name', not 'crop_name'")
    base = None
    if "preset" in data:
        try:
            base = preset(data.pop("preset"))
        except UnknownPreset as exc:
            raise ConfigError(f"{where}: unknown preset {exc.args[0]!r}") from None
    data["crop_name"] = name
    params = from_plain(FieldParams, data, where, base)
    try:
        params.validate()
    except RowBenchError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return params


def parse_config(doc) -> RunConfig:
    """Validate a parsed document. Raises ConfigError on any problem."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(map(str, unknown))}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    crops_doc = doc.get("crops")
    if not isinstance(crops_doc, list) or not crops_doc:
        raise ConfigError("crops must be a non-empty list")
    crops = tuple(_crop(c, i) for i, c in enumerate(crops_doc))
    names = [c.crop_name for c in crops]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate crop names in {names}")
    seeds = doc.get("seeds")
    if (not isinstance(seeds, list) or not seeds
            or any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds)):
        raise ConfigError("seeds must be a non-empty list of non-negative integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be unique")
    episode = from_plain(EpisodeSettings, doc.get("episode") or {}, "episode")
    dists = []
    for i, d in enumerate(doc.get("disturbances") or []):
        if not isinstance(d, dict) or not isinstance(d.get("name"), str) or not d["name"]:
            raise ConfigError(f"disturbances[{i}]: needs a 'name'")
        body = {k: v for k, v in d.items() if k != "name"}
        dists.append(Disturbance(d["name"], from_plain(EpisodeSettings, body, f"disturbances[{i}]", episode)))
    if len({d.name for d in dists}) != len(dists):
        raise ConfigError("duplicate disturbance names")
    out_dir = doc.get("output_dir", "runs")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output_dir must be a non-empty string")
    cfg = RunConfig(crops=crops, seeds=tuple(seeds), episode=episode, disturbances=tuple(dists),
                    output_dir=out_dir)
    # surface episode-level problems (e.g. path longer than a row) before anything runs
    for crop, seed, dname, ep in cfg.matrix():
        try:
            ep.validate()
        except RowBenchError as exc:
            raise ConfigError(f"{crop}/seed {seed}{'/' + dname if dname else ''}: {exc}") from exc
    return cfg


def load_config(source: str | Path) -> RunConfig:
    """Parse a YAML config file."""
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc
    return loads_config(text)


def loads_config(text: str) -> RunConfig:
    try:
        doc = yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return parse_config(doc)


def dumps_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_plain(), sort_keys=False)


def with_output_dir(cfg: RunConfig, out: str | Path) -> RunConfig:
    return replace(cfg, output_dir=str(out))
