# -*- coding: utf-8 -*-
"""Randomized projection solvers (SKM, GSKM, PASKM) for linear feasibility Ax <= b."""
