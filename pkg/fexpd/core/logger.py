import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Generator, Optional

from loguru import logger
from loguru._defaults import LOGURU_FORMAT

from fexpd.core.models.config import LoggerConfig, LoggerLevel
from fexpd.core.settings import get_config

FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level} | {process.name} | "
    "{extra[logger_name]}:{function}:{line} - {message}"
)
WORKER_FORMAT = LOGURU_FORMAT + " <dim>[{process.name}]</dim>"


class InterceptHandler(logging.Handler):
    """
    Forwards stdlib records (including captured numpy/scipy warnings) to Loguru.
    """

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = sys._getframe(6), 6
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.bind(logger_name=record.name).opt(
            depth=depth, exception=record.exc_info
        ).log(level, record.getMessage())


def _resolve_logger_config(config: Optional[LoggerConfig]) -> LoggerConfig:
    if config is not None:
        return config
    try:
        return get_config().logger
    except Exception as e:
        logger.warning(f"No configuration available for logging, using defaults: {e}")
        return LoggerConfig()


def _console_handler(config: LoggerConfig, level: str, worker: bool) -> Dict[str, Any]:
    return {
        "sink": sys.stdout,
        "level": level,
        "serialize": bool(config.json_log),
        "backtrace": True,
        "diagnose": level == LoggerLevel.DEBUG,
        "format": WORKER_FORMAT if worker else LOGURU_FORMAT,
    }


def _file_handler(config: LoggerConfig, level: str, worker: bool) -> Dict[str, Any]:
    log_file = Path(config.log_file)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler: Dict[str, Any] = {
        "sink": str(log_file),
        "level": level,
        "serialize": bool(config.json_log),
        "encoding": "utf-8",
        "backtrace": False,
        "diagnose": False,
        "enqueue": True,
    }
    # only the parent process rotates; workers append to the same file
    if not worker:
        handler.update(rotation="100 MB", retention="30 days", compression="zip")
    if not config.json_log:
        handler["format"] = FILE_FORMAT
    return handler


def setup_logging(config: Optional[LoggerConfig] = None, worker: bool = False) -> None:
    """
    Route stdlib logging and warnings through Loguru and install the sinks.

    Args:
        config (Optional[LoggerConfig]): Explicit logger settings. Defaults to
            the ``logger`` section of the cached application configuration.
        worker (bool): Set inside replicate pool processes. Worker records
            carry the process name and never rotate the shared log file.
    """
    config = _resolve_logger_config(config)
    level = str(config.level or LoggerLevel.INFO).upper()

    logging.root.handlers = [InterceptHandler()]
    logging.root.setLevel(logging.getLevelName(level))
    logging.captureWarnings(True)
    for name in logging.root.manager.loggerDict.keys():
        log = logging.getLogger(name)
        log.handlers.clear()
        log.propagate = True

    handlers = [_console_handler(config, level, worker)]
    if config.log_file:
        handlers.append(_file_handler(config, level, worker))
    logger.configure(handlers=handlers, extra={"logger_name": "fexpd"})
    logger.debug(f"Logging initialized at {level}{' (worker)' if worker else ''}.")


@contextmanager
def disable_logging() -> Generator[None, None, None]:
    """Silence fexpd and stdlib logging inside the block."""
    previous_level = logging.root.manager.disable
    logging.disable(logging.CRITICAL)
    logger.disable("fexpd")
    try:
        yield
    finally:
        logger.enable("fexpd")
        logging.disable(previous_level)
