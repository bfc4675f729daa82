from .config import CONFIG

__version__ = "1.0.0"
