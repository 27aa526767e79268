"""dB / dBm conversions used at the reporting and configuration boundary."""
from __future__ import annotations

import numpy as np


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) / 1000.0


def watt_to_dbm(p):
    """P(dBm) = 10 log10(P_W * 1000)."""
    return 10.0 * np.log10(np.asarray(p, dtype=float) * 1000.0)
