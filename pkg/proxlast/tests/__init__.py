# -*- coding: utf-8 -*-
"""proxlast test suite."""
