"""
function for logs
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"


import os
import logging

LOG_FILE_NAME = "qpde_design.log"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure(out_dir: str = ".", level: int = logging.DEBUG) -> logging.Handler:
    """
    Attach a file handler to the root logger. The log is written in out_dir.
    Calling it again replaces the handler set by a previous call.

    Parameters
    ----------
    out_dir : str
        directory where the log file is written
    level : int
        root logger level

    Returns
    -------
    logging.Handler
        the file handler just attached
    """
    os.makedirs(out_dir, exist_ok=True)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for old in list(root_logger.handlers):
        if getattr(old, "_qpde_design", False):
            root_logger.removeHandler(old)
            old.close()
    handler = logging.FileHandler(os.path.join(out_dir, LOG_FILE_NAME), "w", "utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._qpde_design = True
    root_logger.addHandler(handler)
    return handler
