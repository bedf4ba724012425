from . import elemops, transfer, problems, spacetree, kernels, cycles, amr, oracle, fields, config
from .environment import Environment, default_environment
from .solver import Solver
