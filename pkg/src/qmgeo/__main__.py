"""Allow running qmgeo as ``python -m qmgeo``."""

from qmgeo.cli import app

app()
