from .intervals import *
from .functions import *
from .parallel import *
from .tree import *
from .solver import *
