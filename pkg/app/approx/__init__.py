from .projection import *
