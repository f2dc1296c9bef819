"""hazaug: safety-critical driving data augmentation.

Turns naturalistic driving frames into hazard variants by moving the lead
vehicle closer in 3D (depth unprojection, point-cloud edit, z-buffer
reprojection) and rescaling the deceleration label, with SMOGN and
importance-sampling baselines and a ridge-based evaluation harness.
"""

__version__ = "0.1.0"
