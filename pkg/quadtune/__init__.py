# Noise-aware cascade PID tuning for a simulated quadrotor.
from quadtune.utils import register_imp_level

register_imp_level()
