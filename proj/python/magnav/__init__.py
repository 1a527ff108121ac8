from magnav._core import *  # noqa: F401,F403
from magnav._core import __doc__  # noqa: F401
