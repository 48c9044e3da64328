"""
causal-alarm-rl - online causal reinforcement learning for alarm root-cause repair.

A Hawkes-process fault-alarm environment, online causal structure discovery
from the agent's own repairs, and PPO/DQN agents whose actions are masked to
the root-most active alarm types of the learned graph.
"""

__version__ = "0.1.0"
