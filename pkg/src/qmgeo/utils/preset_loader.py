"""
Preset loader: discover and load experiment preset YAML files.

Looks for ``experiments/`` directories in two locations (highest priority first):

1. Current working directory
2. The qmgeo repo root (bundled presets)

An optional CLI-specified directory is checked with highest priority when provided.
Same-name presets from higher-priority directories override lower ones.

A preset file holds a ``preset:`` mapping with ``name``, an optional
``description`` and a ``config`` mapping in run-config format (flat files
without the ``preset:`` wrapper are accepted too).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import yaml

from ..errors import ConfigError

logger = logging.getLogger(__name__)


# ── Discovery ───────────────────────────────────────────────────────


def discover_preset_dirs(extra_dir: Optional[str | Path] = None) -> list[Path]:
    """Return the ``experiments/`` directories that exist, ordered by priority.

    Priority (highest first):
        1. *extra_dir* (CLI override, if given)
        2. ``./experiments/`` relative to CWD
        3. ``experiments/`` relative to the qmgeo repo root
    """
    dirs: list[Path] = []

    if extra_dir is not None:
        p = Path(extra_dir)
        if p.is_dir():
            dirs.append(p)
        else:
            logger.debug("CLI presets dir does not exist: %s", p)

    cwd_presets = Path.cwd() / "experiments"
    if cwd_presets.is_dir():
        dirs.append(cwd_presets)

    # this file → utils/ → qmgeo/ → src/ → repo root
    package_root = Path(__file__).resolve().parent.parent.parent.parent
    bundled = package_root / "experiments"
    if bundled.is_dir() and bundled.resolve() not in [d.resolve() for d in dirs]:
        dirs.append(bundled)

    return dirs


# ── Loading ─────────────────────────────────────────────────────────


def load_presets(
    dirs: Optional[list[Path]] = None,
    extra_dir: Optional[str | Path] = None,
) -> list[dict[str, Any]]:
    """Load all preset YAML files from the given directories.

    Parameters
    ----------
    dirs : list[Path], optional
        Directories to scan.  When *None*, :func:`discover_preset_dirs` is
        called automatically.
    extra_dir : str | Path, optional
        Passed through to :func:`discover_preset_dirs` when *dirs* is None.

    Returns
    -------
    list[dict]
        Parsed presets.  Higher-priority directories override lower-priority
        ones when two files define the same ``name``.
    """
    if dirs is None:
        dirs = discover_preset_dirs(extra_dir=extra_dir)

    seen: dict[str, dict] = {}
    for d in dirs:
        for path in sorted(d.glob("*.y*ml")):
            if not path.is_file():
                continue
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    data = yaml.safe_load(fh)
            except (OSError, yaml.YAMLError) as exc:
                logger.warning("Skipping malformed preset file %s: %s", path.name, exc)
                continue

            if not isinstance(data, dict):
                logger.warning("Skipping %s: expected a YAML mapping, got %s", path.name, type(data).__name__)
                continue

            preset = data.get("preset", data)
            name = preset.get("name") if isinstance(preset, dict) else None
            if not name:
                logger.warning("Skipping %s: missing 'name' field", path.name)
                continue
            if not isinstance(preset.get("config", {}), dict):
                logger.warning("Skipping %s: 'config' must be a mapping", path.name)
                continue

            if name not in seen:
                preset = dict(preset)
                preset["_source"] = str(path)
                seen[name] = preset
                logger.debug("Loaded preset '%s' from %s", name, path)
            else:
                logger.debug("Preset '%s' already loaded from higher-priority dir, skipping %s", name, path)

    presets = list(seen.values())
    if presets:
        logger.info("Loaded %d preset(s): %s", len(presets), ", ".join(p["name"] for p in presets))
    return presets


def find_preset(name: str, extra_dir: Optional[str | Path] = None) -> dict[str, Any]:
    """Return the preset called *name* (case-insensitive); alt names are honoured."""
    presets = load_presets(extra_dir=extra_dir)
    wanted = name.strip().lower()
    for preset in presets:
        names = [preset["name"], *(preset.get("alt_names", []) or [])]
        if wanted in (str(n).lower() for n in names):
            return preset
    available = ", ".join(sorted(p["name"] for p in presets)) or "none"
    raise ConfigError(f"unknown preset {name!r} (available: {available})", "preset")


def format_presets_table(presets: list[dict[str, Any]]) -> list[tuple[str, str, str]]:
    """``(name, description, source file)`` rows for listing presets."""
    return [
        (p["name"], str(p.get("description", "")).strip(), Path(p["_source"]).name)
        for p in sorted(presets, key=lambda p: p["name"])
    ]
