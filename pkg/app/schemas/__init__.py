from .instance import *
