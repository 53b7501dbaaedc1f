"""Object-level multi-source tracking for infrastructure sensor networks."""

from .core import Detection, Object, ObjectList, StateMask
from .pipeline import Tracker, run, run_batches

__version__ = "0.1.0"

__all__ = ["Detection", "Object", "ObjectList", "StateMask", "Tracker", "run", "run_batches", "__version__"]
