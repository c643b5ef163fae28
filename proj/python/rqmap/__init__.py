"""Warehouse field-map simulator and forecasting backbones."""

from ._core import (
    AntennaPlacement,
    Backbone,
    DepthMap,
    FieldMap,
    Modality,
    Model,
    SceneSpec,
    SceneState,
    SourceSpec,
    build_backbone,
    build_from_arch,
    build_scene,
    corridor_heat_sources,
    corridor_lights,
    generate_labeled_sample,
    illumination_map,
    load_checkpoint,
    project_depth,
    psnr,
    radio_antenna,
    radio_map,
    save_checkpoint,
    scene_with_sources,
    temperature_map,
)

__all__ = [
    "AntennaPlacement",
    "Backbone",
    "DepthMap",
    "FieldMap",
    "Modality",
    "Model",
    "SceneSpec",
    "SceneState",
    "SourceSpec",
    "build_backbone",
    "build_from_arch",
    "build_scene",
    "corridor_heat_sources",
    "corridor_lights",
    "generate_labeled_sample",
    "illumination_map",
    "load_checkpoint",
    "project_depth",
    "psnr",
    "radio_antenna",
    "radio_map",
    "save_checkpoint",
    "scene_with_sources",
    "temperature_map",
]
