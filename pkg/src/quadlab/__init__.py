"""Quadruped locomotion laboratory.

Procedural quadruped morphology generation, an articulated rigid-body
simulator for the fixed base+4x3DoF template, motion-imitation RL
environments, PPO training, and evaluation tooling.
"""

__version__ = "0.1.0"
