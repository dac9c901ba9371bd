from .data import *
from .errors import *
from .logs import *
