"""Event-study analytics for discourse-frame usage around election outcomes."""

__version__ = "0.1.0"

from .frames import FRAMES, FrameLabels  # noqa: F401
from .ingest import Outcome, OutcomeInstance, Post  # noqa: F401
