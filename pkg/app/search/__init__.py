from .aggregate import *
from .baseline import *
from .retrieve import *
from .value import *
