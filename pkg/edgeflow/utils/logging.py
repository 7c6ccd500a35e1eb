"""
Logging setup for edgeflow.

Modules obtain loggers with ``structlog.get_logger(__name__)`` and emit
snake_case events with keyword context. Output goes through the standard
``logging`` handlers so library users keep control of levels and sinks.
"""

import logging
import sys
from typing import Union

import structlog

LOG_FORMAT = "%(message)s"


def configure_logging(level: Union[str, int] = "INFO", json_output: bool = False) -> None:
    """
    Configure structlog and the root logger.

    Args:
        level: Log level name or number
        json_output: Render events as JSON lines instead of console text
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr, level=level, force=True)

    renderer = structlog.processors.JSONRenderer() if json_output else structlog.dev.ConsoleRenderer(colors=False)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )
