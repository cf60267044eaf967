"""Uncalibrated visual servoing laboratory.

A simulated 6-DOF arm watched by a fixed depth camera, driven by a
receding-horizon model-free adaptive controller whose gain matrix and
hand-eye Jacobian estimate are RBF networks updated online, plus three
comparison controllers and a closed-loop experiment harness.
"""

__version__ = "0.1.0"
