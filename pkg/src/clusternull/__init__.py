"""Coverage and rate evaluation of clustered intercell interference nulling
in Poisson cellular networks, with limited-feedback bit allocation and a
Monte Carlo cross-validation oracle."""

from .geometry import FixedNt, FollowN, SimConfig

__all__ = ["SimConfig", "FollowN", "FixedNt"]
__version__ = "0.1.0"
