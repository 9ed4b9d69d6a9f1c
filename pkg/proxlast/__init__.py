# -*- coding: utf-8 -*-
"""Last-iterate convergence experiments for composite stochastic proximal methods."""
