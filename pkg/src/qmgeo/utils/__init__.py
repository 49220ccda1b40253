"""
Utilities module for qmgeo.
"""

from .streams import derive_seed, derive_stream
from .table_io import read_table, write_json, write_table
from .preset_loader import discover_preset_dirs, load_presets, find_preset

__all__ = [
    "derive_seed",
    "derive_stream",
    "read_table",
    "write_json",
    "write_table",
    "discover_preset_dirs",
    "load_presets",
    "find_preset",
]
