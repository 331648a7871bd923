# Numerics
from .tensor_data import *  # noqa: F401,F403
from .autodiff import *  # noqa: F401,F403
from .fast_ops import *  # noqa: F401,F403
from .fast_conv import *  # noqa: F401,F403
from .module import *  # noqa: F401,F403
from .nn import *  # noqa: F401,F403
from .network import *  # noqa: F401,F403
from .optim import *  # noqa: F401,F403
from .checkpoint import *  # noqa: F401,F403

# Game
from .gridworld import *  # noqa: F401,F403
from .observation import *  # noqa: F401,F403
from .trajectory import *  # noqa: F401,F403

# Agents
from .policy import *  # noqa: F401,F403
from .replay import *  # noqa: F401,F403
from .config import *  # noqa: F401,F403
from .tabular import *  # noqa: F401,F403
from .dqn import *  # noqa: F401,F403

# Experiments
from .analysis import *  # noqa: F401,F403
from .harness import *  # noqa: F401,F403
from .raster import *  # noqa: F401,F403

version = "0.1"
