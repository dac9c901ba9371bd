from .lattice import *
from .ops import *
