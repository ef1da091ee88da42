"""Configuration shared by every layer."""

from cudf_align.core.config import LogLevel, Settings, settings

__all__ = ["LogLevel", "Settings", "settings"]
