# -*- coding: utf-8 -*-
"""Paths and fixed names used across the proxlast package."""
import os
from pathlib import Path


MODULE_NAME = "proxlast"
HERE = os.path.abspath(os.path.dirname(__file__))
PROJECT_ROOT = str(Path(HERE).parent)
CONFIGS_ROOT = os.path.join(PROJECT_ROOT, "configs")

ENV_SEED = "PROXLAST_SEED"

REPORT_CSV = "rate_report.csv"
REPORT_JSON = "rate_report.json"
COMPARISON_CSV = "last_vs_avg.csv"
COMPARISON_JSON = "last_vs_avg.json"
VERIFY_JSON = "verify_report.json"
MANIFEST_JSON = "manifest.json"
