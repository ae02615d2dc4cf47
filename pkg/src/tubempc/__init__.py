"""Tube-based nonlinear MPC for an underactuated underwater vehicle.

Library layout:

- ``geometry``: spherical-world workspace, clearances, range-limited sensing
- ``vehicle``: reduced 4-state kinematics, disturbances, RK4 plant stepping
- ``errorframe``: tracking-error coordinates and their dynamics
- ``tube``: feedback-gain/tube certification and constraint tightening
- ``fhocp``: finite-horizon optimal control transcription and solver
- ``controller``: the receding-horizon closed loop
- ``simharness``: scenario files, deterministic simulation, logs and plots
"""

__version__ = "0.1.0"
