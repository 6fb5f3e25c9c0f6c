"""Task and motion planning with execution-time behaviors on a 2D tabletop."""

__version__ = "0.1.0"
