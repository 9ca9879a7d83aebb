"""Anonymous ECC mutual authentication between users and MEC servers."""

from .crypto_core import DEFAULT_CURVE, P256, TOY, get_curve
from .errors import MecAuthError
from .handshake import ServerSession, UserSession, run_in_process
from .registry import Directory, register, setup

__all__ = [
    "DEFAULT_CURVE", "P256", "TOY", "get_curve", "MecAuthError",
    "ServerSession", "UserSession", "run_in_process",
    "Directory", "register", "setup",
]
__version__ = "0.1.0"
