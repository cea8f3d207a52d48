"""Logger setup shared by the CLI pipelines."""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def default_log_dir() -> Path:
    return Path(os.environ.get("CHARFLOW_LOG_DIR", "~/.charflow")).expanduser()


def setup_logger(name: str = "charflow", log_dir: Optional[Path] = None, verbose: bool = False) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    if not logger.handlers:
        console = logging.StreamHandler()
        console.setLevel(logging.DEBUG if verbose else logging.INFO)
        fmt = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s', datefmt='%H:%M:%S')
        console.setFormatter(fmt)
        logger.addHandler(console)

        log_dir = Path(log_dir) if log_dir else default_log_dir()
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            file_h = logging.FileHandler(log_dir / "charflow.log")
            file_h.setLevel(logging.DEBUG)
            file_h.setFormatter(fmt)
            logger.addHandler(file_h)
        except OSError as e:
            logger.warning(f"File logging disabled ({log_dir}): {e}")

    return logger
