"""
Core engine: covariance-matrix algebra, the distribution protocol,
Monte Carlo preparation and parameter sweeps.

Usage:
    from core.protocol import ProtocolParams, run_protocol
    from core.montecarlo import simulate_preparation
    from core.sweep import SweepSpec, run_sweep
"""

__all__ = [
    "ProtocolParams",
    "run_protocol",
    "simulate_preparation",
    "SweepSpec",
    "run_sweep",
]


# Lazy imports - only load when accessed
def __getattr__(name):
    if name in ("ProtocolParams", "run_protocol"):
        from core import protocol
        return getattr(protocol, name)
    elif name == "simulate_preparation":
        from core.montecarlo import simulate_preparation
        return simulate_preparation
    elif name in ("SweepSpec", "run_sweep"):
        from core import sweep
        return getattr(sweep, name)
    raise AttributeError(f"module 'core' has no attribute '{name}'")
