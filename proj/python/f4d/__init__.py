from ._f4d import *  # noqa: F401,F403
from ._f4d import F4dError, PcaModel, __doc__  # noqa: F401
