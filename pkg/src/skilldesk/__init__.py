"""skilldesk: human-in-the-loop skill learning for a desk-scale tabletop robot.

The package couples a language-driven skill selector (pluggable text and
vision model backends), a teleoperated demonstration recorder, a diffusion
behavioral-cloning policy with receding-horizon execution, a 2-D tabletop
simulator, an evaluation harness, and an orchestrator exposing the whole
loop over an HTTP API.
"""

__version__ = "0.1.0"
