# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Conditional Weibull-tail coefficient estimation under random right censoring."""

__version__ = "0.1.0"
