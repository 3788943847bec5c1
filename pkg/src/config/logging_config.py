"""
Logging configuration for thermoctl.
Structured JSON records on stderr, plus a rotating file when THERMOCTL_LOG_PATH is set.
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from typing import List

import structlog
from structlog.stdlib import LoggerFactory
from structlog.types import Processor

from .settings import (
    LOG_BACKUP_COUNT,
    LOG_LEVEL,
    LOG_PATH,
    LOG_ROTATION_SIZE_MB
)

PROCESSORS: List[Processor] = [
    structlog.processors.TimeStamper(fmt="iso"),
    structlog.stdlib.add_log_level,
    structlog.processors.CallsiteParameterAdder(
        [
            structlog.processors.CallsiteParameter.MODULE,
            structlog.processors.CallsiteParameter.FUNC_NAME,
            structlog.processors.CallsiteParameter.LINENO,
        ]
    ),
    structlog.processors.StackInfoRenderer(),
    structlog.processors.format_exc_info,
    structlog.processors.UnicodeDecoder(),
    structlog.processors.JSONRenderer(sort_keys=True),
]

# Marks handlers installed here so repeated setup calls only change the level
_HANDLER_TAG = "_thermoctl_handler"


def _tagged(handler: logging.Handler) -> logging.Handler:
    handler.setFormatter(logging.Formatter("%(message)s"))
    setattr(handler, _HANDLER_TAG, True)
    return handler


def _build_handlers() -> List[logging.Handler]:
    # stdout is reserved for reports
    handlers = [_tagged(logging.StreamHandler(sys.stderr))]
    if LOG_PATH is not None:
        LOG_PATH.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(_tagged(RotatingFileHandler(
            LOG_PATH,
            maxBytes=LOG_ROTATION_SIZE_MB * 1024 * 1024,
            backupCount=LOG_BACKUP_COUNT
        )))
    return handlers


def setup_logging(level: str = LOG_LEVEL) -> None:
    """Configure structlog over stdlib logging at the given level."""
    structlog.configure(
        processors=PROCESSORS,
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level.upper()))
    if not any(getattr(h, _HANDLER_TAG, False) for h in root_logger.handlers):
        for handler in _build_handlers():
            root_logger.addHandler(handler)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """
    Get a structured logger for a module.

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.debug("Computed Gibbs state", dim=4, log_partition=1.86)
    """
    return structlog.get_logger(name)


setup_logging()
