"""LP relaxations, approximation policies and exact optima for stochastic multi-armed bandits."""

__version__ = "0.1.0"
