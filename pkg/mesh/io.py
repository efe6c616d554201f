import json
import os
from typing import Dict

from loguru import logger

from mesh.complex import MeshError, SimplicialComplex, build_complex
from mesh.generators import GENERATORS

_MESH_CACHE: Dict[str, SimplicialComplex] = {}


def load_mesh(path: str) -> SimplicialComplex:
    """Read a mesh JSON file: vertices, cells, boundary_tags (+ optional conventions, period)."""
    path = os.path.abspath(path)
    if path in _MESH_CACHE:
        return _MESH_CACHE[path]
    if not os.path.exists(path):
        raise MeshError(f"mesh file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    for key in ("vertices", "cells"):
        if key not in raw:
            raise MeshError(f"mesh file {path} lacks '{key}'")
    complex_ = build_complex(
        raw["vertices"],
        raw["cells"],
        boundary_tags=raw.get("boundary_tags"),
        conventions=raw.get("conventions"),
        period=raw.get("period"),
    )
    _MESH_CACHE[path] = complex_
    logger.info(f"Loaded mesh with {complex_.n_cells(0)} vertices from {path}")
    return complex_


def mesh_from_spec(spec: dict) -> SimplicialComplex:
    """Build a mesh from a scenario `mesh` block: {kind, ...generator args} or {file}."""
    if "file" in spec:
        return load_mesh(spec["file"])
    kind = spec.get("kind")
    if kind not in GENERATORS:
        raise MeshError(f"unknown mesh kind '{kind}' (have {sorted(GENERATORS)})")
    args = {k: v for k, v in spec.items() if k != "kind"}
    return GENERATORS[kind](**args)
