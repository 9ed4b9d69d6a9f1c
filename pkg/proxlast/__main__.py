# -*- coding: utf-8 -*-
"""python -m proxlast"""
import sys

from proxlast.cli import main


sys.exit(main())
