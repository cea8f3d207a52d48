"""Common utilities for pipeline stages"""
import os
from pathlib import Path
from typing import Optional


def ensure_output_directory(base_path: str) -> str:
    """Ensure output directory exists"""
    Path(base_path).mkdir(parents=True, exist_ok=True)
    return base_path


def get_output_file_path(base_path: str, name: str, extension: str) -> str:
    """Generate standardized output file path"""
    return os.path.join(base_path, f"{name}.{extension}")


def log_stage_start(logger, stage_name: str, detail: Optional[str] = None) -> None:
    """Log stage initialization"""
    if detail:
        logger.info(f"▶️ {stage_name} ({detail})")
    else:
        logger.info(f"▶️ {stage_name}")


def log_stage_complete(logger, stage_name: str, detail: Optional[str] = None) -> None:
    """Log stage completion"""
    if detail:
        logger.info(f"✅ {stage_name} completed: {detail}")
    else:
        logger.info(f"✅ {stage_name} completed")


def log_stage_error(logger, stage_name: str, error: Exception) -> None:
    """Log stage error"""
    logger.error(f"❌ {stage_name} failed: {error}")
