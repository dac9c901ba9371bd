from .instance import InstanceManager, load_instance, parse_instance, emit_instance
from .runner import SweepRunner
