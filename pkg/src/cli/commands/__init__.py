from . import diagnose, estimate, montecarlo, simulate

COMMANDS = (simulate, estimate, montecarlo, diagnose)

__all__ = ["COMMANDS", "diagnose", "estimate", "montecarlo", "simulate"]
