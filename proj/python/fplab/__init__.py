from ._fplab import *  # noqa: F401,F403
from ._fplab import __version__  # noqa: F401
