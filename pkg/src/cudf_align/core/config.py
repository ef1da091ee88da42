from enum import Enum
import os
from pydantic import BaseModel


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class Settings(BaseModel):
    # Solver budget, applied per lexicographic level
    budget_nodes: int = int(os.getenv("CUDF_ALIGN_BUDGET_NODES", "10000000"))
    budget_seconds: float = float(os.getenv("CUDF_ALIGN_BUDGET_SECONDS", "60"))

    # Exhaustive oracle refuses universes larger than this
    brute_force_cap: int = int(os.getenv("CUDF_ALIGN_BRUTE_FORCE_CAP", "20"))

    # Output
    out_dir: str = os.getenv("CUDF_ALIGN_OUT_DIR", "out")
    log_level: LogLevel = LogLevel(os.getenv("CUDF_ALIGN_LOG_LEVEL", "INFO").upper())


settings = Settings()
