import logging
import os
from config import Config


def _configure_root():
    root = logging.getLogger(Config.LOGGER_NAME)
    if root.handlers:
        return root
    root.setLevel(getattr(logging, Config.LOG_LEVEL))
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(formatter)
    root.addHandler(console_handler)

    # File handler, only once the CLI has created the log directory
    if os.path.isdir(Config.LOG_DIR):
        file_handler = logging.FileHandler(os.path.join(Config.LOG_DIR, 'rtrl_lab.log'))
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
    return root


class Logger:
    """Logger for one component, a child of the 'rtrl_lab' logger"""

    def __init__(self, component=None):
        root = _configure_root()
        self.logger = root.getChild(component) if component else root

    def log(self, message, level='INFO'):
        """Log message with specified level"""
        getattr(self.logger, level.lower())(message)

    def abort(self, what, error):
        """Record a NumericOverflowError that ended a run"""
        self.logger.warning(f"{what} aborted at t={error.t} in stage '{error.stage}'")

    def info(self, message):
        self.logger.info(message)

    def error(self, message):
        self.logger.error(message)

    def debug(self, message):
        self.logger.debug(message)

    def warning(self, message):
        self.logger.warning(message)
