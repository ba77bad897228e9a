from .two_atom import TwoAtomParams, DARK_STATE, BRIGHT_STATE
from .cavity import CavityParams, InitialState, InitialStateKind
from .config import ConfigLoader
from .runner import RunOptions, run


__all__ = [
    "TwoAtomParams",
    "DARK_STATE",
    "BRIGHT_STATE",
    "CavityParams",
    "InitialState",
    "InitialStateKind",
    "ConfigLoader",
    "RunOptions",
    "run",
]
