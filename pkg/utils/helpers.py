"""Common utility functions for the ntest toolkit."""

import logging
import math
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from .constants import LOG_FORMAT, TIMESTAMP_FORMAT


def get_file_timestamp() -> str:
    return datetime.now().strftime(TIMESTAMP_FORMAT)


def ensure_directory(path: str) -> Path:
    """Ensure directory exists, create if needed."""
    dir_path = Path(path)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Install root handlers once; later calls only adjust the level."""
    root = logging.getLogger()
    root.setLevel(level.upper())
    if getattr(configure_logging, "_installed", False):
        return

    formatter = logging.Formatter(LOG_FORMAT)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        ensure_directory(str(Path(log_file).parent))
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    configure_logging._installed = True  # type: ignore[attr-defined]


def format_percentage(value: float, decimals: int = 1) -> str:
    """Format a probability as a percentage string."""
    return f"{100.0 * value:.{decimals}f}%"


def mc_stderr(p: float, reps: int) -> float:
    """Monte Carlo standard error of a rejection rate."""
    if reps <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / reps)


def chunk_sizes(total: int, chunk_size: int) -> List[int]:
    """Split ``total`` replications into chunks of at most ``chunk_size``."""
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def calculate_eta(current: int, total: int, elapsed_seconds: float) -> str:
    """Calculate estimated time remaining."""
    if current == 0 or elapsed_seconds == 0:
        return "calculating..."

    rate = current / elapsed_seconds
    remaining = total - current
    eta_seconds = remaining / rate if rate > 0 else 0

    if eta_seconds < 60:
        return f"{int(eta_seconds)}s"
    elif eta_seconds < 3600:
        return f"{int(eta_seconds // 60)}m {int(eta_seconds % 60)}s"
    else:
        hours = int(eta_seconds // 3600)
        minutes = int((eta_seconds % 3600) // 60)
        return f"{hours}h {minutes}m"
