"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class StateError(RuntimeError):
    """Operation applied to a state that cannot accept it."""


class MacError(RuntimeError):
    """MAC-layer contract violation, e.g. transmitting without holding the slot."""
