"""Chance-constrained sparse secret-key generation toolkit."""

try:
    from ._sparsekey import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # pragma: no cover
    from _sparsekey import *  # noqa: F401,F403  (in-build layout)
