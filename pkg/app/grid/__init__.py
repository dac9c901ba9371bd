from .flow import *
from .network import *
