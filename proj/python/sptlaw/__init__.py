from ._sptlaw import *  # noqa: F401,F403
