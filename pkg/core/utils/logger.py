"""
Perforated Medium Simulator - Centralized Logging Module

One file per channel under the log directory:
- system.log:   startup, configuration, manifests, CLI runs, sweep rows
- solver.log:   factorizations, multi-RHS solves, residuals
- geometry.log: partitions, hole placement, layer census
- errors.log:   ERROR and above from every channel

Console output is colored. The log directory defaults to ``logs/`` and is
moved with HOLES_LOG_DIR; HOLES_CONSOLE_LEVEL sets the console threshold
(default INFO). Both may come from a ``.env`` file.
"""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict

from dotenv import load_dotenv

CHANNELS = ('system', 'solver', 'geometry', 'errors')

FILE_FORMAT = '%(asctime)s | %(levelname)-8s | %(message)s'
ERRORS_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s'
CONSOLE_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s'
FILE_DATEFMT = '%Y-%m-%d %H:%M:%S'
CONSOLE_DATEFMT = '%H:%M:%S'


class ColoredFormatter(logging.Formatter):
    """Console formatter that colors the level name"""

    RESET = '\033[0m'
    LEVEL_COLORS = {
        logging.DEBUG: '\033[36m',
        logging.INFO: '\033[32m',
        logging.WARNING: '\033[33m',
        logging.ERROR: '\033[31m',
        logging.CRITICAL: '\033[35m',
    }

    def format(self, record):
        color = self.LEVEL_COLORS.get(record.levelno)
        if color is None:
            return super().format(record)
        # file handlers share the record; color a copy
        colored = logging.makeLogRecord(record.__dict__)
        colored.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(colored)


def _file_handler(path: Path, level: int, fmt: str) -> logging.FileHandler:
    handler = logging.FileHandler(path)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt, datefmt=FILE_DATEFMT))
    return handler


class HolesLogger:
    """
    Channel loggers for the simulator

    Usage:
        logger = HolesLogger.get_logger("solver")
        logger.info("Factorized LS operator: 4096 cells")
    """

    _loggers: Dict[str, logging.Logger] = {}
    _initialized = False
    log_dir: Path = Path('logs')
    log_files: Dict[str, Path] = {}
    console_level = logging.INFO

    @classmethod
    def initialize(cls, log_dir: str = None):
        """
        Resolve the log directory once per process

        Args:
            log_dir: Directory for the .log files (default: $HOLES_LOG_DIR or "logs")
        """
        if cls._initialized:
            return

        load_dotenv()
        cls.log_dir = Path(log_dir or os.getenv('HOLES_LOG_DIR', 'logs'))
        cls.log_dir.mkdir(parents=True, exist_ok=True)
        cls.log_files = {name: cls.log_dir / f"{name}.log" for name in CHANNELS}
        cls.console_level = logging.getLevelName(os.getenv('HOLES_CONSOLE_LEVEL', 'INFO').upper())
        if not isinstance(cls.console_level, int):
            cls.console_level = logging.INFO
        cls._initialized = True

        cls.get_logger('system').debug(
            f"Simulator session started {datetime.now().strftime(FILE_DATEFMT)} "
            f"(logs in {cls.log_dir})")

    @classmethod
    def get_logger(cls, name: str) -> logging.Logger:
        """
        Logger for one channel, created on first use

        Args:
            name: 'system', 'solver', 'geometry' or 'errors'; other names
                get console output and errors.log only

        Returns:
            logging.Logger named holes.<name>
        """
        if not cls._initialized:
            cls.initialize()

        if name in cls._loggers:
            return cls._loggers[name]

        logger = logging.getLogger(f"holes.{name}")
        logger.setLevel(logging.DEBUG)
        logger.handlers.clear()
        logger.propagate = False

        if name in cls.log_files:
            logger.addHandler(_file_handler(cls.log_files[name], logging.DEBUG, FILE_FORMAT))
        if name != 'errors':
            logger.addHandler(_file_handler(cls.log_files['errors'], logging.ERROR, ERRORS_FORMAT))

        console = logging.StreamHandler(sys.stdout)
        console.setLevel(cls.console_level)
        console.setFormatter(ColoredFormatter(CONSOLE_FORMAT, datefmt=CONSOLE_DATEFMT))
        logger.addHandler(console)

        cls._loggers[name] = logger
        return logger

    @classmethod
    def log_solve(cls, kind: str, size: int, rhs: int, seconds: float, **kwargs):
        """
        One line per dense solve on the solver channel

        Args:
            kind: 'LS', 'FOLDY', 'GREEN'
            size: Matrix dimension
            rhs: Number of right-hand sides
            seconds: Wall time
            **kwargs: residual, cond, kappa (each optional)
        """
        parts = [kind, f"size: {size}", f"rhs: {rhs}", f"{seconds:.3f}s"]
        if 'residual' in kwargs:
            parts.append(f"residual: {kwargs['residual']:.2e}")
        if 'cond' in kwargs:
            parts.append(f"cond~ {kwargs['cond']:.2e}")
        if 'kappa' in kwargs:
            parts.append(f"kappa: {kwargs['kappa']:g}")
        cls.get_logger('solver').info(" | ".join(parts))

    @classmethod
    def log_sweep_row(cls, a: float, holes: int, discrepancy: float, **kwargs):
        """
        One line per a-sweep row on the system channel

        Args:
            a: Hole diameter
            holes: Number of holes M
            discrepancy: sup-norm far-field difference
            **kwargs: study, distance, status (each optional)
        """
        head = "SWEEP"
        if 'study' in kwargs:
            head = f"{kwargs['study'].upper()} SWEEP"
        parts = [head, f"a: {a:.5f}", f"M: {holes}", f"sup|dF|: {discrepancy:.4e}"]
        if 'distance' in kwargs:
            parts.append(f"d: {kwargs['distance']:.4f}")
        if 'status' in kwargs:
            parts.append(kwargs['status'])
        cls.get_logger('system').info(" | ".join(parts))

    @classmethod
    def shutdown(cls):
        """Flush and close every handler"""
        if not cls._initialized:
            return
        cls.get_logger('system').debug(
            f"Simulator session stopped {datetime.now().strftime(FILE_DATEFMT)}")
        for logger in cls._loggers.values():
            for handler in logger.handlers:
                handler.flush()
                handler.close()


def get_logger(name: str = 'system') -> logging.Logger:
    """
    Shortcut for HolesLogger.get_logger

    Example:
        from core.utils.logger import get_logger
        logger = get_logger('solver')
        logger.info("Assembly done")
    """
    return HolesLogger.get_logger(name)
