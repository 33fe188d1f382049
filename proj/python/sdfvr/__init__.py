"""SDF volume rendering and view-consistency toolkit."""

from ._sdfvr import *  # noqa: F401,F403
from ._sdfvr import __doc__  # noqa: F401
