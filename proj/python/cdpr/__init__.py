"""Cable-driven parallel robot toolkit."""

from ._cdpr import *  # noqa: F401,F403
