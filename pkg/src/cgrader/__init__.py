"""Auto-grading pipeline for C programming assignments."""

__version__ = "0.1.0"
