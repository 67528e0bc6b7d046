"""Open-vocabulary object search over grouped Gaussian-splat scenes."""

from ._ovgs import *  # noqa: F401,F403
from ._ovgs import InputError  # noqa: F401

DEFAULT_K = 5
