from .dynamics import *
from .state import *
