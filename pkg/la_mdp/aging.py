import numpy as np

SENTINEL = -1


def age_harq(h, age_tti, window: int):
    """Soft aging of +/-1 HARQ feedback: linear decay to 0 at the window edge"""
    h = np.asarray(h, dtype=float)
    age = np.asarray(age_tti, dtype=float)
    aged = np.where(age <= window, h * (1.0 - age / window), 0.0)
    return float(aged) if aged.ndim == 0 else aged


def age_hard(value, age_tti, window: int):
    """Keep the value while age <= window, otherwise the -1 sentinel"""
    value = np.asarray(value)
    aged = np.where(np.asarray(age_tti) <= window, value, SENTINEL)
    return aged.item() if aged.ndim == 0 else aged
