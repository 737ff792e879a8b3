import os

DEFAULT_BUDGET = 2 ** 24


def enumeration_budget(budget=None):
    """Explicit budget wins, then GAUSSLINE_BUDGET, then the default."""
    if budget is not None:
        return int(budget)
    env = os.environ.get("GAUSSLINE_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_BUDGET
