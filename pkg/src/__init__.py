"""No-trick kernel adaptive filtering and the Mackey-Glass benchmark."""

__version__ = "0.3.0"
