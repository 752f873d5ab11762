"""
Run every subcommand on the reduced demo configuration
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import os
import sys

from qpde_design.cli import main, SUBCOMMANDS

config_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "reduced_demo.yaml")
out_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "results")

#########################################################
# Fourier fit, verification suite, forward run, landscape and costs
codes = {}
for subcommand in SUBCOMMANDS:
    codes[subcommand] = main([subcommand, "--config", config_path, "--out", out_dir])
    print(f"{subcommand}: exit code {codes[subcommand]}")
#########################################################

sys.exit(max(codes.values()))
